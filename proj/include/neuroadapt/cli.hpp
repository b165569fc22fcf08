#pragma once

#include <ostream>

namespace neuroadapt {

// Entry point of the neuroadapt command-line tool:
//
//   simulate       --config FILE | --preset NAME  --runs N --seed S --out DIR
//                  [--force] [--parallelism P] [--save-datasets]
//   train-decoder  DATASET --out DIR [--seed S] [--force]
//   run-session    --config FILE | --preset NAME  --listen HOST:PORT --out DIR
//                  [--force] [--resume] [--seed S]
//   analyze        DIR --out DIR [--non-converged exclude|impute-max-trials]
//   replay         LOG
//
// Human-readable progress goes to `out`; failures are reported on `err` as
// one JSON object {"error": kind, "message": ..., [key|line|trial_id]}.
// Returns the process exit code (0 success, 1 failure, 2 usage error).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace neuroadapt
