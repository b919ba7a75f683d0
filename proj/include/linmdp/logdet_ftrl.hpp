#pragma once

// Policy optimization with logdet FTRL, split-half loss estimators and
// optimistic bonus matrices, preceded by pure exploration.

#include "linmdp/env_suite.hpp"
#include "linmdp/explore.hpp"
#include "linmdp/ftrl.hpp"
#include "linmdp/ledger.hpp"
#include "linmdp/obme.hpp"

namespace linmdp {

struct AlgoParams {
  double eta = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double alpha = 0.0;
  long tau = 1;
  double delta = 0.0;
  double rho = 0.0;
  double eps_cov = 0.0;
  /// Episode budget for exploration; negative means K.
  long explore_budget = -1;
  /// Build bonus matrices once per epoch half instead of every episode.
  bool obme_per_epoch = false;
  /// Compute the shadow-oracle bonus diagnostics (test-time only).
  bool diagnostics = true;
  /// Run per-state FTRL solves on one thread.
  bool serial = false;
  FtrlOptions ftrl;
};

/// The schedule tied to K, d and H used by the analysis.
AlgoParams default_params(int d, int H, long K);

struct LogdetRun {
  RegretLedger ledger;
  KnownStateReport exploration;
  long epochs = 0;
};

LogdetRun run_logdet_ftrl(const LinearMDP& mdp, const LossSchedule& schedule, const AlgoParams& params, Rng& rng);

}  // namespace linmdp
