#pragma once

#include "opal/environment.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace opal {

/// Population plus the metadata some operators keep between calls.
struct PopulationState {
    RowMatrix X;
    Eigen::VectorXd fitness;
    // PSO metadata, created on the first pso_global_step and kept afterwards.
    std::optional<RowMatrix> velocities;
    std::optional<RowMatrix> pbest_X;
    std::optional<Eigen::VectorXd> pbest_f;
    Eigen::Index best_index = 0;

    Eigen::Index size() const noexcept { return X.rows(); }
    Eigen::Index dim() const noexcept { return X.cols(); }
    double best_fitness() const { return fitness[best_index]; }
    /// argmin of fitness, ties to the lowest index.
    void refresh_best();
};

/// Uniform random population in the environment's box, evaluated.
PopulationState random_population(Environment& env, Eigen::Index size, Rng& rng);

enum class OpToken : std::uint8_t {
    de_rand_1_bin = 0,
    de_best_1_bin,
    uniform_crossover_pairs,
    pso_global_step,
    gaussian_mutation_self,
    gaussian_mutation_best,
    restart_worst_fraction,
    local_search_best_axis,
};

inline constexpr int kNumOperators = 8;

std::string_view to_string(OpToken t);
OpToken token_from_string(std::string_view name);
inline OpToken token_from_index(int i) { return static_cast<OpToken>(i); }
inline int token_index(OpToken t) { return static_cast<int>(t); }
bool is_de_token(OpToken t);

using Theta = std::map<std::string, double, std::less<>>;

/// Declared hyperparameters of a token and their default values.
const Theta& default_theta(OpToken t);

struct OperatorCall {
    OpToken token = OpToken::de_rand_1_bin;
    Theta theta;  // overrides; keys must be declared by the token
};

struct OperatorProgram {
    std::vector<OperatorCall> calls;

    std::size_t size() const noexcept { return calls.size(); }
    std::vector<OpToken> tokens() const;
    static OperatorProgram from_tokens(const std::vector<OpToken>& tokens);
};

/// One call per line: `token key=value ...`. Blank lines and `#` comments
/// are ignored when parsing.
std::string format_program(const OperatorProgram& program);
OperatorProgram parse_program(std::string_view text);

/// v = base + F * (a - b)
Eigen::RowVectorXd de_mutation_rand1(const Eigen::Ref<const Eigen::RowVectorXd>& base,
                                     const Eigen::Ref<const Eigen::RowVectorXd>& a,
                                     const Eigen::Ref<const Eigen::RowVectorXd>& b, double F);

/// Apply one operator call to `state` in place and return the number of
/// function evaluations it spent. Operators never evaluate beyond
/// `env.remaining()`; the cost is 0 only when nothing remains.
std::size_t apply_operator(const OperatorCall& call, PopulationState& state, Environment& env,
                           Rng& rng);

/// Largest cost a single call can have for a population of `pop` in `dim`
/// dimensions (used for overshoot allowances and budget checks).
std::size_t max_call_cost(const OperatorCall& call, Eigen::Index pop, Eigen::Index dim);

/// One DE/x/1/bin generation with greedy one-to-one selection.
std::size_t de_generation(PopulationState& state, Environment& env, Rng& rng, double F, double CR,
                          bool from_best);

}  // namespace opal
