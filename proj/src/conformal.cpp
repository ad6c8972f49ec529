#include "sigma2/conformal.hpp"

#include "sigma2/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sigma2 {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

struct RhsValues {
    Field value;
    Field dz;
    std::optional<NonlocalTerm> nonlocal;  // d value_i / d u_j = -row_scale[i] * weights[j]
};

RhsValues evaluate_rhs(const ProblemSpec& prob, const Field& u, const Model& model) {
    const std::size_t count = u.size();
    RhsValues r;
    r.value.assign(count, 0.0);
    r.dz.assign(count, 0.0);
    std::visit(overloaded{
                   [&](const ConstantRhs& c) { std::fill(r.value.begin(), r.value.end(), c.value); },
                   [&](const FieldRhs& c) { r.value = c.value; },
                   [&](const SphereTargetRhs&) {
                       const double k = sphere_sigma2_sqrt(model.dim());
                       for (std::size_t i = 0; i < count; ++i) {
                           r.value[i] = k * std::exp(-2.0 * u[i]);
                           r.dz[i] = -2.0 * r.value[i];
                       }
                   },
                   [&](const EigenPathRhs& c) {
                       for (std::size_t i = 0; i < count; ++i) {
                           r.value[i] = (c.s + (1.0 - c.s) * c.f0[i]) * std::exp(c.eps * (u[i] + c.offset));
                           r.dz[i] = c.eps * r.value[i];
                       }
                   },
                   [&](const YamabePathRhs& c) {
                       const double k = sphere_sigma2_sqrt(model.dim());
                       const double psi = psi_ramp(c.t_path);
                       const double vol4 = weighted_volume(u, 4.0, model.metric);
                       const double root = std::sqrt(vol4);
                       for (std::size_t i = 0; i < count; ++i) {
                           const double local = psi * k * std::exp(-2.0 * u[i]);
                           r.value[i] = (1.0 - c.t_path) * root + local;
                           r.dz[i] = -2.0 * local;
                       }
                       if (c.t_path < 1.0) {
                           NonlocalTerm nl;
                           nl.row_scale.assign(count, 2.0 * (1.0 - c.t_path) / root);
                           nl.weights.resize(count);
                           for (std::size_t j = 0; j < count; ++j)
                               nl.weights[j] = model.metric.volume_weights[j] * std::exp(-4.0 * u[j]);
                           r.nonlocal = std::move(nl);
                       }
                   },
                   [&](const CallableRhs& c) {
                       for (std::size_t i = 0; i < count; ++i) std::tie(r.value[i], r.dz[i]) = c.fn(i, u[i]);
                   },
               },
               prob.f);
    return r;
}

/// c and c_z at a boundary node.
std::pair<double, double> evaluate_bc(const ProblemSpec& prob, std::size_t node, double z) {
    return std::visit(overloaded{
                          [&](const ZeroBc&) { return std::pair{0.0, 0.0}; },
                          [&](const FieldBc& c) { return std::pair{c.value[node], 0.0}; },
                          [&](const ExpBc& c) {
                              const double v = c.value[node] * std::exp(-z);
                              return std::pair{v, -v};
                          },
                          [&](const CallableBc& c) { return c.fn(node, z); },
                      },
                      prob.c);
}

void check_cone(const ConformalState& state) {
    if (state.cone_margin > 0.0) return;
    std::vector<std::pair<std::size_t, double>> offenders;
    for (std::size_t i = 0; i < state.u.size(); ++i) {
        const double m = std::min(state.sigma1[i], state.sigma2[i]);
        if (!(m > 0.0)) offenders.emplace_back(i, m);
    }
    std::ostringstream os;
    os << offenders.size() << " node(s) outside Gamma_2^+, worst node " << state.worst_node << " margin "
       << state.cone_margin;
    throw ConeExitError(os.str(), std::move(offenders));
}

}  // namespace

void ProblemSpec::validate(std::size_t nodes) const {
    if (!(t <= 1.0)) throw Error(ErrorKind::InvalidArgument, "modified Schouten parameter t must be <= 1");
    auto need = [&](const Field& f, const char* what) {
        if (f.size() != nodes) throw Error(ErrorKind::InvalidArgument, std::string(what) + " has wrong size");
    };
    std::visit(overloaded{
                   [&](const FieldRhs& c) { need(c.value, "f field"); },
                   [&](const EigenPathRhs& c) {
                       need(c.f0, "eigen-path f0");
                       if (!(c.s >= 0.0 && c.s <= 1.0) || !(c.eps > 0.0))
                           throw Error(ErrorKind::InvalidArgument, "eigen path needs s in [0,1] and eps > 0");
                   },
                   [&](const YamabePathRhs& c) {
                       if (!(c.t_path >= 0.0 && c.t_path <= 1.0))
                           throw Error(ErrorKind::InvalidArgument, "yamabe path parameter outside [0,1]");
                   },
                   [&](const CallableRhs& c) {
                       if (!c.fn) throw Error(ErrorKind::InvalidArgument, "empty callable f");
                   },
                   [](const auto&) {},
               },
               f);
    std::visit(overloaded{
                   [&](const FieldBc& c) { need(c.value, "c field"); },
                   [&](const ExpBc& c) { need(c.value, "c field"); },
                   [&](const CallableBc& c) {
                       if (!c.fn) throw Error(ErrorKind::InvalidArgument, "empty callable c");
                   },
                   [](const auto&) {},
               },
               c);
    if (!shift.empty() && shift.size() != nodes) throw Error(ErrorKind::InvalidArgument, "shift field has wrong size");
}

bool ProblemSpec::translation_invariant() const {
    if (raising == Raising::Deformed) return false;
    const bool f_const = std::holds_alternative<ConstantRhs>(f) || std::holds_alternative<FieldRhs>(f);
    const bool c_const = std::holds_alternative<ZeroBc>(c) || std::holds_alternative<FieldBc>(c);
    return f_const && c_const;
}

TensorField modified_schouten(const CurvaturePack& pack, const MetricField& metric, double t) {
    const int n = pack.n;
    if (n < 3) throw Error(ErrorKind::InvalidArgument, "modified Schouten tensor needs n >= 3");
    TensorField A(metric.size());
    for (std::size_t i = 0; i < metric.size(); ++i)
        A[i] = (pack.ricci[i] - t * pack.scalar[i] / (2.0 * (n - 1)) * metric.g[i]) / (n - 2);
    return A;
}

ConformalState deform(const TensorField& A_t, const Field& u, double t, const Model& model) {
    const int n = model.dim();
    const std::size_t count = model.size();
    if (u.size() != count || A_t.size() != count)
        throw Error(ErrorKind::InvalidArgument, "field sizes do not match the model");
    ConformalState s;
    s.t = t;
    s.u = u;
    s.grad.resize(count);
    s.hess.resize(count);
    s.W.resize(count);
    s.spectra.resize(count);
    s.sigma1.resize(count);
    s.sigma2.resize(count);
    s.cone_margin = std::numeric_limits<double>::infinity();
    const double c1 = (1.0 - t) / (n - 2);
    const double c2 = (2.0 - t) / 2.0;
    for (std::size_t i = 0; i < count; ++i) {
        const Matrix& g = model.metric.g[i];
        const Matrix& ginv = model.metric.g_inv[i];
        const Vector du = model.grid.gradient(u, i);
        Matrix H = model.grid.partials(u, i);
        for (int k = 0; k < n; ++k) {
            if (du(k) == 0.0) continue;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) H(a, b) -= model.curvature.gamma(i, k, a, b) * du(k);
        }
        H = 0.5 * (H + H.transpose()).eval();
        const double lap = ginv.cwiseProduct(H).sum();
        const double grad2 = du.dot(ginv * du);
        Matrix W = A_t[i] + H + c1 * lap * g + du * du.transpose() - c2 * grad2 * g;
        W = 0.5 * (W + W.transpose()).eval();
        const Matrix M = ginv * W;
        s.sigma1[i] = M.trace();
        s.sigma2[i] = sigma2_mixed(M);
        s.spectra[i] = spectrum(W, g);
        const double margin = std::min(s.sigma1[i], s.sigma2[i]);
        if (margin < s.cone_margin) {
            s.cone_margin = margin;
            s.worst_node = i;
        }
        s.grad[i] = du;
        s.hess[i] = std::move(H);
        s.W[i] = std::move(W);
    }
    return s;
}

double sphere_sigma2_sqrt(int n) { return std::sqrt(n * (n - 1) / 8.0); }

double psi_ramp(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 0.5) return 1.0;
    const double x = 2.0 * t;
    return std::clamp(3.0 * x * x - 2.0 * x * x * x, 0.0, 1.0);
}

TensorField yamabe_shift(const Model& model, double t_path) {
    if (model.dim() != 3) throw Error(ErrorKind::InvalidArgument, "the Yamabe path is three-dimensional");
    const TensorField A = modified_schouten(model.curvature, model.metric, 1.0);
    const double vol = weighted_volume(Field(model.size(), 0.0), 0.0, model.metric);
    const double factor = 1.0 - psi_ramp(t_path);
    TensorField S(model.size());
    for (std::size_t i = 0; i < model.size(); ++i)
        S[i] = factor * (std::sqrt(vol) / std::sqrt(3.0) * model.metric.g[i] - A[i]);
    return S;
}

double raised_sigma2(const ConformalState& state, std::size_t node, Raising raising) {
    const double s = state.sigma2[node];
    return raising == Raising::Background ? s : std::exp(4.0 * state.u[node]) * s;
}

Field interior_residual(const ConformalState& state, const ProblemSpec& prob, const Model& model) {
    check_cone(state);
    const RhsValues rhs = evaluate_rhs(prob, state.u, model);
    Field r(state.u.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double s2 = raised_sigma2(state, i, prob.raising);
        r[i] = (prob.form == ResidualForm::SquareRoot ? sqrt_sigma2(s2) : s2) - rhs.value[i];
    }
    return r;
}

Field normal_derivative(const Field& u, const Model& model) {
    Field un;
    un.reserve(model.boundary.nodes.size());
    for (const auto& b : model.boundary.nodes) {
        double s = 0.0;
        for (int i = 0; i < model.dim(); ++i)
            if (b.normal(i) != 0.0) s += b.normal(i) * model.grid.grad_stencil(b.node, i).apply(u);
        un.push_back(s);
    }
    return un;
}

Field boundary_residual(const ConformalState& state, const ProblemSpec& prob, const Model& model) {
    const Field un = normal_derivative(state.u, model);
    Field r(un.size());
    for (std::size_t k = 0; k < un.size(); ++k) {
        const auto& b = model.boundary.nodes[k];
        r[k] = un[k] + b.h - evaluate_bc(prob, b.node, state.u[b.node]).first;
    }
    return r;
}

Field equation_residual(const ConformalState& state, const ProblemSpec& prob, const Model& model) {
    Field r = interior_residual(state, prob, model);
    const Field rb = boundary_residual(state, prob, model);
    for (std::size_t k = 0; k < rb.size(); ++k) r[model.boundary.nodes[k].node] = rb[k];
    return r;
}

Field conformal_mean_curvature(const ConformalState& state, const Model& model) {
    const Field un = normal_derivative(state.u, model);
    Field h(un.size());
    for (std::size_t k = 0; k < un.size(); ++k) {
        const auto& b = model.boundary.nodes[k];
        h[k] = std::exp(state.u[b.node]) * (un[k] + b.h);
    }
    return h;
}

LinearizedOperator linearize(const ConformalState& state, const ProblemSpec& prob, const Model& model) {
    check_cone(state);
    const int n = model.dim();
    const std::size_t count = model.size();
    const double t = state.t;
    const double c1 = (1.0 - t) / (n - 2);
    const RhsValues rhs = evaluate_rhs(prob, state.u, model);
    LinearizedOperator op;
    op.second.assign(count, Matrix::Zero(n, n));
    op.first.assign(count, Vector::Zero(n));
    op.zero.assign(count, 0.0);
    op.boundary_row.assign(count, 0);

    for (std::size_t i = 0; i < count; ++i) {
        if (model.boundary.at(i)) continue;
        const double s2 = raised_sigma2(state, i, prob.raising);
        if (prob.form == ResidualForm::SquareRoot && s2 < 1e-12)
            throw ConeExitError("sigma_2 below 1e-12 at node " + std::to_string(i) + "; refusing to linearize",
                                {{i, s2}});
        const Matrix& ginv = model.metric.g_inv[i];
        const Matrix M = ginv * state.W[i];
        const Matrix F = sigma2_gradient(M);
        Matrix Ft = F * ginv;  // contravariant d sigma_2 / d W_ab
        Ft = 0.5 * (Ft + Ft.transpose()).eval();
        const double trF = F.trace();
        const Matrix P = Ft + c1 * trF * ginv;
        const Vector& du = state.grad[i];
        Vector first = 2.0 * Ft * du - (2.0 - t) * trF * (ginv * du);
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) s += P(a, b) * model.curvature.gamma(i, k, a, b);
            first(k) -= s;
        }
        Matrix second = P;
        double zero = 0.0;
        if (prob.raising == Raising::Deformed) {
            const double e4 = std::exp(4.0 * state.u[i]);
            second *= e4;
            first *= e4;
            zero += 4.0 * s2;
        }
        if (prob.form == ResidualForm::SquareRoot) {
            const double scale = 1.0 / (2.0 * std::sqrt(s2));
            second *= scale;
            first *= scale;
            zero *= scale;
        }
        zero -= rhs.dz[i];
        op.second[i] = second;
        op.first[i] = first;
        op.zero[i] = zero;
    }
    for (const auto& b : model.boundary.nodes) {
        op.boundary_row[b.node] = 1;
        op.first[b.node] = b.normal;
        op.zero[b.node] = -evaluate_bc(prob, b.node, state.u[b.node]).second;
    }
    if (rhs.nonlocal) {
        NonlocalTerm nl = *rhs.nonlocal;
        for (std::size_t i = 0; i < count; ++i)
            if (op.boundary_row[i]) nl.row_scale[i] = 0.0;
        op.nonlocal = std::move(nl);
    }
    return op;
}

Field LinearizedOperator::apply(const Field& v, const ChartGrid& grid) const {
    const std::size_t count = size();
    const int n = grid.dim();
    Field out(count, 0.0);
    double nonlocal_dot = 0.0;
    if (nonlocal)
        for (std::size_t j = 0; j < count; ++j) nonlocal_dot += nonlocal->weights[j] * v[j];
    for (std::size_t i = 0; i < count; ++i) {
        double s = zero[i] * v[i];
        for (int a = 0; a < n; ++a) {
            if (first[i](a) != 0.0) s += first[i](a) * grid.grad_stencil(i, a).apply(v);
            for (int b = a; b < n; ++b) {
                const double c = a == b ? second[i](a, a) : second[i](a, b) + second[i](b, a);
                if (c != 0.0) s += c * grid.hess_stencil(i, a, b).apply(v);
            }
        }
        if (nonlocal) s += nonlocal->row_scale[i] * nonlocal_dot;
        out[i] = s;
    }
    return out;
}

Eigen::SparseMatrix<double> LinearizedOperator::local_matrix(const ChartGrid& grid) const {
    const std::size_t count = size();
    const int n = grid.dim();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(count * 20);
    auto push = [&](std::size_t row, const Stencil& s, double c) {
        for (int k = 0; k < s.size; ++k)
            trip.emplace_back(static_cast<int>(row), static_cast<int>(s.terms[k].first), c * s.terms[k].second);
    };
    for (std::size_t i = 0; i < count; ++i) {
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i), zero[i]);
        for (int a = 0; a < n; ++a) {
            if (first[i](a) != 0.0) push(i, grid.grad_stencil(i, a), first[i](a));
            for (int b = a; b < n; ++b) {
                const double c = a == b ? second[i](a, a) : second[i](a, b) + second[i](b, a);
                if (c != 0.0) push(i, grid.hess_stencil(i, a, b), c);
            }
        }
    }
    Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(count));
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

double weighted_volume(const Field& u, double p, const MetricField& metric) {
    if (u.size() != metric.volume_weights.size())
        throw Error(ErrorKind::InvalidArgument, "field size does not match the metric");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += metric.volume_weights[i] * std::exp(-p * u[i]);
    return s;
}

}  // namespace sigma2
