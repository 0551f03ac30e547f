#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "impact/config.hpp"
#include "impact/pde.hpp"

namespace impact {

/// One cross-validation study. Seeds and budgets are explicit so reruns are
/// bit-identical.
struct StudyConfig {
    std::string kind = "expansion";  // expansion | variance | consistency
    RootConfig root;
    std::vector<double> eps_list = {0.4, 0.2, 0.1, 0.05};
};

struct ExpansionReport {
    ExpansionTable table;
    bool slope_ok = false;       // fitted log-log slope >= 1.5
    bool ratios_ok = false;      // gap ratio per eps-halving <= 0.6
};

struct VarianceReport {
    double delta_v_price = 0.0;       // correction PDE at (0, spot)
    double coefficient = 0.0;         // lambda2 / (4 lambda1) = f/2
    double mc_variance = 0.0;         // Var[dx g_hat(X0_T)]
    double mc_variance_stderr = 0.0;
    double rhs = 0.0;                 // coefficient * mc_variance
    double tolerance = 0.0;           // 3 combined stderr + grid term
    bool pass = false;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
};

struct MatrixCell {
    std::string name;
    double lhs = 0.0, rhs = 0.0, margin = 0.0;
    bool pass = false;
};

struct ConsistencyReport {
    std::vector<MatrixCell> cells;
    bool all_pass = true;
};

ExpansionReport run_expansion_study(const StudyConfig& cfg);

/// Checks the first-order price correction against the terminal-delta
/// variance formula. Requires constant sigma0 and f.
VarianceReport run_variance_identity(const StudyConfig& cfg);

ConsistencyReport run_consistency_matrix(const StudyConfig& cfg);

}  // namespace impact
