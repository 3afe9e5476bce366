#pragma once

#include "fedsciml/deeponet.hpp"
#include "fedsciml/problems.hpp"

namespace fedsciml::experiments {

/// Per-problem training settings (local epochs, global rounds, learning
/// rate). Rounds follow the published budgets; runs may scale them down.
struct TrainingDefaults {
    int local_epochs = 5;
    int rounds = 1000;
    double learning_rate = 1e-3;
};

TrainingDefaults training_defaults(const std::string& problem);

/// The heterogeneity sweep each experiment uses by default (total subdomain
/// counts, or active Chebyshev terms for operator problems).
std::vector<int> default_sweep(const std::string& problem);

bool is_operator_problem(const std::string& problem);

/// Builds either a PINN/regression problem or an operator problem behind the
/// common interface. For operator problems n and clients fix the sampled
/// function spaces.
std::unique_ptr<fed::FederatedProblem> build_problem(const std::string& name, int n,
                                                     int clients,
                                                     const pde::ProblemOptions& popts = {},
                                                     const onet::OperatorOptions& oopts = {});

/// One sweep point: federated vs centralized vs per-client extrapolation,
/// all from the same initialization, plus the shard heterogeneity and the
/// final federated-vs-centralized weight divergence.
struct ComparisonResult {
    int n = 0;
    double w1 = 0.0;
    double federated_error = 0.0;
    double centralized_error = 0.0;
    std::optional<double> federated_secondary;
    std::optional<double> centralized_secondary;
    std::vector<fed::ExtrapolationResult> extrapolation;
    fed::DivergenceEntry final_divergence;
    fed::TrainingRun federated_run;
    fed::TrainingRun centralized_run;

    double worst_extrapolation_error() const;
};

ComparisonResult run_comparison(const fed::FederatedProblem& problem, int n,
                                const fed::FederationConfig& config);

/// Spearman rank correlation with average ranks on ties.
double spearman(std::span<const double> a, std::span<const double> b);

} // namespace fedsciml::experiments
