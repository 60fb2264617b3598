#include "opal/policy.hpp"

#include <cmath>

namespace opal {

namespace {

void check_finite(const Eigen::MatrixXd& m, const std::string& name) {
    if (!m.allFinite()) throw NumericalError("non-finite values in " + name);
}

void check_finite(double v, const std::string& name) {
    if (!std::isfinite(v)) throw NumericalError("non-finite value in " + name);
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& x) {
    return (x.array() > 0.0).cast<double>().matrix();
}

}  // namespace

std::size_t Architecture::parameter_count() const {
    std::size_t n = 0;
    for (int l = 0; l < layers; ++l) {
        const int in = l == 0 ? input : hidden;
        n += static_cast<std::size_t>(in * hidden + hidden);
    }
    n += static_cast<std::size_t>(phases * (hidden * operators + operators));
    n += static_cast<std::size_t>(hidden * aux_hidden + aux_hidden);
    n += static_cast<std::size_t>(aux_hidden * classes + classes);
    return n;
}

PolicyParams::PolicyParams(const Architecture& arch) : arch_(arch) {
    if (arch.input < 1 || arch.hidden < 1 || arch.layers < 1 || arch.operators < 1 || arch.phases < 1 ||
        arch.classes < 1 || arch.aux_hidden < 1)
        throw std::invalid_argument("policy architecture: all sizes must be positive");
    Eigen::Index off = 0;
    auto add = [&](std::string name, int rows, int cols) {
        blocks_.push_back({std::move(name), off, rows, cols});
        off += static_cast<Eigen::Index>(rows) * cols;
    };
    for (int l = 0; l < arch.layers; ++l) {
        add("gnn" + std::to_string(l) + ".W", l == 0 ? arch.input : arch.hidden, arch.hidden);
        add("gnn" + std::to_string(l) + ".b", arch.hidden, 1);
    }
    for (int p = 0; p < arch.phases; ++p) {
        add("phase" + std::to_string(p) + ".W", arch.hidden, arch.operators);
        add("phase" + std::to_string(p) + ".b", arch.operators, 1);
    }
    add("aux.hidden.W", arch.hidden, arch.aux_hidden);
    add("aux.hidden.b", arch.aux_hidden, 1);
    add("aux.out.W", arch.aux_hidden, arch.classes);
    add("aux.out.b", arch.classes, 1);
    flat_ = Eigen::VectorXd::Zero(off);
}

PolicyParams PolicyParams::initialized(const Architecture& arch, std::uint64_t seed) {
    PolicyParams p(arch);
    Rng rng(seed);
    for (const Block& b : p.blocks_) {
        if (b.cols == 1 && b.name.ends_with(".b")) continue;
        const double bound = std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
        std::uniform_real_distribution<double> u(-bound, bound);
        auto m = view(p.flat_, b);
        for (auto& v : m.reshaped()) v = u(rng);
    }
    return p;
}

void PolicyParams::set_flat(const Eigen::VectorXd& v) {
    if (v.size() != flat_.size())
        throw std::invalid_argument("policy parameters: expected " + std::to_string(flat_.size()) +
                                    " values, got " + std::to_string(v.size()));
    flat_ = v;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
    return (e / e.sum()).matrix();
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    return (logits.array() - lse).matrix();
}

double categorical_entropy(const Eigen::VectorXd& logits) {
    const Eigen::VectorXd lp = log_softmax(logits);
    return -(lp.array().exp() * lp.array()).sum();
}

Eigen::MatrixXd mean_aggregator(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("adjacency must be square");
    const Eigen::VectorXd deg = A.rowwise().sum();
    if ((deg.array() <= 0.0).any()) throw std::invalid_argument("adjacency has a node without neighbours");
    return deg.cwiseInverse().asDiagonal() * A;
}

ForwardPass forward(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A, const PolicyParams& params) {
    const Architecture& arch = params.arch();
    if (H.cols() != arch.input)
        throw std::invalid_argument("node features have " + std::to_string(H.cols()) + " columns, expected " +
                                    std::to_string(arch.input));
    if (H.rows() == 0) throw std::invalid_argument("graph has no nodes");
    if (A.rows() != H.rows() || A.cols() != H.rows())
        throw std::invalid_argument("adjacency does not match the node count");
    ForwardPass f;
    f.adj_norm = mean_aggregator(A);
    Eigen::MatrixXd h = H;
    for (int l = 0; l < arch.layers; ++l) {
        f.inputs.push_back(h);
        f.aggregated.push_back(f.adj_norm * h);
        Eigen::MatrixXd pre = f.aggregated.back() * params.gnn_weight(l);
        pre.rowwise() += params.gnn_bias(l).col(0).transpose();
        check_finite(pre, "gnn layer " + std::to_string(l));
        h = relu(pre);
        f.pre.push_back(std::move(pre));
    }
    f.z = h.colwise().mean().transpose();
    f.logits = phase_logits(f.z, params);
    check_finite(f.logits, "phase logits");
    f.log_probs.resize(f.logits.rows(), f.logits.cols());
    for (Eigen::Index p = 0; p < f.logits.cols(); ++p) f.log_probs.col(p) = log_softmax(f.logits.col(p));
    f.aux_pre = params.aux_weight(0).transpose() * f.z + params.aux_bias(0).col(0);
    f.aux_hidden = f.aux_pre.cwiseMax(0.0);
    f.aux_logits = params.aux_weight(1).transpose() * f.aux_hidden + params.aux_bias(1).col(0);
    check_finite(f.aux_logits, "aux logits");
    return f;
}

Eigen::VectorXd gnn_forward(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A, const PolicyParams& params) {
    const Architecture& arch = params.arch();
    if (H.cols() != arch.input || A.rows() != H.rows() || A.cols() != H.rows() || H.rows() == 0)
        throw std::invalid_argument("gnn_forward: dimension mismatch");
    const Eigen::MatrixXd adj = mean_aggregator(A);
    Eigen::MatrixXd h = H;
    for (int l = 0; l < arch.layers; ++l) {
        Eigen::MatrixXd pre = (adj * h) * params.gnn_weight(l);
        pre.rowwise() += params.gnn_bias(l).col(0).transpose();
        h = relu(pre);
    }
    return h.colwise().mean().transpose();
}

Eigen::MatrixXd phase_logits(const Eigen::VectorXd& z, const PolicyParams& params) {
    const Architecture& arch = params.arch();
    if (z.size() != arch.hidden) throw std::invalid_argument("phase_logits: embedding size mismatch");
    Eigen::MatrixXd out(arch.operators, arch.phases);
    for (int p = 0; p < arch.phases; ++p)
        out.col(p) = params.phase_weight(p).transpose() * z + params.phase_bias(p).col(0);
    return out;
}

Eigen::VectorXd aux_forward(const Eigen::VectorXd& z, const PolicyParams& params) {
    if (z.size() != params.arch().hidden) throw std::invalid_argument("aux_forward: embedding size mismatch");
    const Eigen::VectorXd hidden = (params.aux_weight(0).transpose() * z + params.aux_bias(0).col(0)).cwiseMax(0.0);
    return params.aux_weight(1).transpose() * hidden + params.aux_bias(1).col(0);
}

PolicyOutput decode(const ForwardPass& pass, DecodeMode mode, Rng& rng) {
    PolicyOutput out;
    out.z = pass.z;
    out.aux_logits = pass.aux_logits;
    out.probs = pass.log_probs.array().exp().matrix();
    std::vector<OpToken> tokens;
    for (Eigen::Index p = 0; p < pass.logits.cols(); ++p) {
        const Eigen::VectorXd probs = out.probs.col(p);
        Eigen::Index pick = 0;
        if (mode == DecodeMode::greedy) {
            for (Eigen::Index k = 1; k < pass.logits.rows(); ++k)
                if (pass.logits(k, p) > pass.logits(pick, p)) pick = k;
        } else {
            std::discrete_distribution<Eigen::Index> dist(probs.data(), probs.data() + probs.size());
            pick = dist(rng);
        }
        out.tokens.push_back(static_cast<int>(pick));
        tokens.push_back(token_from_index(static_cast<int>(pick)));
        out.log_prob += pass.log_probs(pick, p);
        out.entropy += categorical_entropy(pass.logits.col(p));
    }
    out.program = OperatorProgram::from_tokens(tokens);
    return out;
}

PolicyOutput decode(const Eigen::VectorXd& z, const PolicyParams& params, DecodeMode mode, Rng& rng) {
    ForwardPass pass;
    pass.z = z;
    pass.logits = phase_logits(z, params);
    pass.log_probs.resize(pass.logits.rows(), pass.logits.cols());
    for (Eigen::Index p = 0; p < pass.logits.cols(); ++p) pass.log_probs.col(p) = log_softmax(pass.logits.col(p));
    pass.aux_logits = aux_forward(z, params);
    return decode(pass, mode, rng);
}

namespace {

void check_terms(const LossTerms& t, const Architecture& arch) {
    if (t.tokens.size() != static_cast<std::size_t>(arch.phases))
        throw std::invalid_argument("loss: expected one token per phase");
    for (int tok : t.tokens)
        if (tok < 0 || tok >= arch.operators) throw std::invalid_argument("loss: token out of range");
    if (t.label && (*t.label < 0 || *t.label >= arch.classes))
        throw std::invalid_argument("loss: label out of range");
    if (!std::isfinite(t.advantage)) throw NumericalError("non-finite advantage");
}

struct Scalars {
    double loss, log_prob, entropy, aux_loss;
};

Scalars scalars(const ForwardPass& f, const LossTerms& t) {
    Scalars s{0.0, 0.0, 0.0, 0.0};
    for (Eigen::Index p = 0; p < f.logits.cols(); ++p) {
        s.log_prob += f.log_probs(t.tokens[static_cast<std::size_t>(p)], p);
        s.entropy += categorical_entropy(f.logits.col(p));
    }
    if (t.label) s.aux_loss = -log_softmax(f.aux_logits)[*t.label];
    s.loss = -t.advantage * s.log_prob - t.beta * s.entropy + (t.label ? t.lambda_aux * s.aux_loss : 0.0);
    return s;
}

}  // namespace

double loss_value(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A, const LossTerms& terms,
                  const PolicyParams& params) {
    check_terms(terms, params.arch());
    return scalars(forward(H, A, params), terms).loss;
}

LossResult loss_and_gradient(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A, const LossTerms& terms,
                             const PolicyParams& params) {
    const Architecture& arch = params.arch();
    check_terms(terms, arch);
    const ForwardPass f = forward(H, A, params);
    const Scalars s = scalars(f, terms);
    check_finite(s.loss, "loss");

    LossResult out;
    out.loss = s.loss;
    out.log_prob = s.log_prob;
    out.entropy = s.entropy;
    out.aux_loss = s.aux_loss;
    out.aux_logits = f.aux_logits;
    out.grad = Eigen::VectorXd::Zero(params.flat().size());
    auto grad_of = [&](const Eigen::Map<const Eigen::MatrixXd>& m) {
        const auto off = static_cast<Eigen::Index>(m.data() - params.flat().data());
        return Eigen::Map<Eigen::MatrixXd>(out.grad.data() + off, m.rows(), m.cols());
    };

    Eigen::VectorXd dz = Eigen::VectorXd::Zero(arch.hidden);

    // phase heads: d/dlogits of -A log pi(o) - beta H(pi)
    for (int p = 0; p < arch.phases; ++p) {
        const Eigen::VectorXd lp = f.log_probs.col(p);
        const Eigen::VectorXd pi = lp.array().exp().matrix();
        const double ent = -(pi.array() * lp.array()).sum();
        Eigen::VectorXd g = terms.advantage * pi;
        g[terms.tokens[static_cast<std::size_t>(p)]] -= terms.advantage;
        g += terms.beta * (pi.array() * (lp.array() + ent)).matrix();
        grad_of(params.phase_weight(p)) = f.z * g.transpose();
        grad_of(params.phase_bias(p)) = g;
        dz += params.phase_weight(p) * g;
    }

    if (terms.label && terms.lambda_aux != 0.0) {
        Eigen::VectorXd dc = softmax(f.aux_logits);
        dc[*terms.label] -= 1.0;
        dc *= terms.lambda_aux;
        grad_of(params.aux_weight(1)) = f.aux_hidden * dc.transpose();
        grad_of(params.aux_bias(1)) = dc;
        const Eigen::VectorXd da = (params.aux_weight(1) * dc).cwiseProduct(relu_mask(f.aux_pre));
        grad_of(params.aux_weight(0)) = f.z * da.transpose();
        grad_of(params.aux_bias(0)) = da;
        dz += params.aux_weight(0) * da;
    }

    // mean pooling
    const auto N = static_cast<double>(H.rows());
    Eigen::MatrixXd dh = Eigen::MatrixXd::Ones(H.rows(), 1) * (dz.transpose() / N);
    for (int l = arch.layers - 1; l >= 0; --l) {
        const auto ul = static_cast<std::size_t>(l);
        const Eigen::MatrixXd dpre = dh.cwiseProduct(relu_mask(f.pre[ul]));
        grad_of(params.gnn_weight(l)) = f.aggregated[ul].transpose() * dpre;
        grad_of(params.gnn_bias(l)) = dpre.colwise().sum().transpose();
        if (l > 0) dh = f.adj_norm.transpose() * (dpre * params.gnn_weight(l).transpose());
    }
    check_finite(out.grad, "gradient");
    return out;
}

}  // namespace opal
