#include "flownav/zermelo.hpp"

#include "flownav/error.hpp"
#include "flownav/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace flownav::zermelo {

void ZermeloConfig::validate() const {
    const Eigen::LLT<Eigen::Matrix3d> llt(R);
    if (!R.isApprox(R.transpose()) || llt.info() != Eigen::Success)
        throw Error("invalid_config", "R must be symmetric positive definite");
    if (!(kappa > 0) || !(alpha > 0) || !(beta > 0) || !(u_max > 0))
        throw Error("invalid_config", "kappa, alpha, beta and u_max must be positive");
    for (double a : alphas)
        if (!(a > 0)) throw Error("invalid_config", "obstacle alphas must be positive");
    for (double b : betas)
        if (!(b > 0)) throw Error("invalid_config", "obstacle betas must be positive");
    if (quadrature_points < 2) throw Error("invalid_config", "need at least 2 quadrature intervals");
    if (control_points < degree + 1) throw Error("degenerate_trajectory", "need at least degree + 1 control points");
}

namespace {

/// Basis values at the fixed Simpson nodes, shared by every cost evaluation of one run.
struct BasisTable {
    int intervals = 0;
    int degree = 3;
    std::vector<std::size_t> first;  // index of the first non-zero basis function per node
    std::vector<std::vector<double>> n, dn;
};

BasisTable make_table(const std::vector<double>& knots, int degree, std::size_t count, int intervals) {
    BasisTable tab;
    tab.intervals = intervals;
    tab.degree = degree;
    for (int m = 0; m <= intervals; ++m) {
        const double u = double(m) / double(intervals);
        const std::size_t span = find_span(knots, degree, count, u);
        std::vector<double> n, dn;
        basis_with_derivative(knots, degree, span, u, n, dn);
        tab.first.push_back(span - std::size_t(degree));
        tab.n.push_back(std::move(n));
        tab.dn.push_back(std::move(dn));
    }
    return tab;
}

int even_intervals(int m) { return m % 2 == 0 ? m : m + 1; }

double unwrap_step(double prev, double next) {
    double d = next - prev;
    while (d > std::numbers::pi) d -= 2 * std::numbers::pi;
    while (d < -std::numbers::pi) d += 2 * std::numbers::pi;
    return prev + d;
}

constexpr double kStill = 1e-9;
constexpr double kDetourMargin = 0.3;

CostBreakdown evaluate_cost(const std::vector<Vec3>& cps, double T, const BasisTable& tab, const FrozenFlow& flow,
                            const Scene& scene, const Vec3& target, const ZermeloConfig& cfg) {
    if (!(T > 0.0) || !std::isfinite(T)) throw Error("degenerate_trajectory", "final time must be positive");
    const int M = tab.intervals;
    const double dt = T / double(M);
    std::vector<Vec3> x(std::size_t(M + 1));
    std::vector<double> speed(std::size_t(M + 1)), psi(std::size_t(M + 1)), theta(std::size_t(M + 1));
    bool heading_seen = false;
    for (int m = 0; m <= M; ++m) {
        Vec3 p, dp;
        const auto& n = tab.n[std::size_t(m)];
        const auto& dn = tab.dn[std::size_t(m)];
        for (int r = 0; r <= tab.degree; ++r) {
            const Vec3& c = cps[tab.first[std::size_t(m)] + std::size_t(r)];
            p += c * n[std::size_t(r)];
            dp += c * dn[std::size_t(r)];
        }
        const Vec3 w = dp * (1.0 / T) - (flow ? flow(p) : Vec3{});
        x[std::size_t(m)] = p;
        speed[std::size_t(m)] = w.norm();
        const std::size_t i = std::size_t(m);
        if (speed[i] <= kStill) {
            /// Heading is undefined without airspeed; carry the last one.
            if (m > 0) {
                psi[i] = psi[i - 1];
                theta[i] = theta[i - 1];
            }
            continue;
        }
        psi[i] = std::atan2(w.y, w.x);
        theta[i] = std::atan2(w.z, std::hypot(w.x, w.y));
        if (!heading_seen) {
            for (std::size_t k = 0; k < i; ++k) {
                psi[k] = psi[i];
                theta[k] = theta[i];
            }
            heading_seen = true;
        } else {
            psi[i] = unwrap_step(psi[i - 1], psi[i]);
        }
    }

    CostBreakdown c;
    double control_int = 0.0, obstacle_int = 0.0, bound_int = 0.0;
    for (int m = 0; m <= M; ++m) {
        const std::size_t i = std::size_t(m);
        const std::size_t lo = m == 0 ? 0 : i - 1, hi = m == M ? i : i + 1;
        const double span = double(hi - lo) * dt;
        const Eigen::Vector3d chi((psi[hi] - psi[lo]) / span, (theta[hi] - theta[lo]) / span, speed[i]);
        const double control = 0.5 * chi.dot(cfg.R * chi);

        const double obstacle = obstacle_potential(x[i], scene, cfg);

        auto excess = [](double v, double lim) { return std::max(0.0, std::abs(v) - lim); };
        const double ev = excess(chi[2], cfg.u_max), ey = excess(chi[0], cfg.max_yaw_rate),
                     ep = excess(chi[1], cfg.max_pitch_rate);
        const Vec3 outside = x[i] - scene.domain.clamp(x[i]);
        const double bound = cfg.bound_weight * (ev * ev + ey * ey + ep * ep + outside.dot(outside));

        const double wgt = (m == 0 || m == M) ? 1.0 : (m % 2 == 1 ? 4.0 : 2.0);
        control_int += wgt * control;
        obstacle_int += wgt * obstacle;
        bound_int += wgt * bound;
    }
    const double simpson = dt / 3.0;
    c.time = T;
    c.control = simpson * control_int;
    c.obstacle = simpson * obstacle_int;
    c.bounds = simpson * bound_int;
    const Vec3 miss = x.back() - target;
    c.terminal = cfg.kappa * miss.dot(miss);
    c.total = c.time + c.control + c.obstacle + c.terminal + c.bounds;
    return c;
}

double softplus(double s) { return s > 30 ? s : std::log1p(std::exp(s)); }
double softplus_inverse(double y) { return y > 30 ? y : std::log(std::expm1(y)); }

}  // namespace

double obstacle_distance(const Box& box, const Vec3& x) {
    if (!box.contains(x)) return box.distance(x);
    /// Inside: minus a smooth depth that vanishes on every face and feels all three axes.
    const Vec3 h = box.extent() * 0.5, o = x - box.center();
    double inv = 0.0;
    for (const auto& [hk, ok] : {std::pair{h.x, o.x}, std::pair{h.y, o.y}, std::pair{h.z, o.z}}) {
        const double q = (hk * hk - ok * ok) / (2.0 * hk);
        if (!(q > 0.0)) return 0.0;
        inv += 1.0 / q;
    }
    return -1.0 / inv;
}

double obstacle_potential(const Vec3& x, const Scene& scene, const ZermeloConfig& config) {
    double phi = 0.0;
    for (std::size_t o = 0; o < scene.obstacles.size(); ++o)
        phi += config.alpha_for(o) * std::exp(-config.beta_for(o) * obstacle_distance(scene.obstacles[o], x));
    return phi;
}

PlannedControl planned_control(const SplineTrajectory& traj, const FrozenFlow& flow, double t) {
    t = std::clamp(t, 0.0, traj.final_time);
    const Vec3 w = traj.velocity(t) - (flow ? flow(traj.position(t)) : Vec3{});
    return {w.norm(), std::atan2(w.y, w.x), std::atan2(w.z, std::hypot(w.x, w.y))};
}

CostBreakdown trajectory_cost(const SplineTrajectory& traj, const FrozenFlow& flow, const Scene& scene,
                              const Vec3& target, const ZermeloConfig& config) {
    config.validate();
    const auto& cps = traj.curve.control_points();
    const BasisTable tab =
        make_table(traj.curve.knots(), traj.curve.degree(), cps.size(), even_intervals(config.quadrature_points));
    return evaluate_cost(cps, traj.final_time, tab, flow, scene, target, config);
}

SplineTrajectory straight_line(const Vec3& start, const Vec3& target, double final_time, const ZermeloConfig& config) {
    std::vector<Vec3> pts(std::size_t(config.control_points));
    BSpline probe(pts, config.degree);
    const auto g = probe.greville();
    for (std::size_t j = 0; j < pts.size(); ++j) pts[j] = start + (target - start) * g[j];
    return {BSpline(std::move(pts), config.degree), final_time};
}

namespace {

bool segment_hits(const Box& box, const Vec3& a, const Vec3& b) {
    double lo = 0.0, hi = 1.0;
    for (int k = 0; k < 3; ++k) {
        const double d = b[k] - a[k];
        if (std::abs(d) < 1e-15) {
            if (a[k] < box.min[k] || a[k] > box.max[k]) return false;
            continue;
        }
        double t0 = (box.min[k] - a[k]) / d, t1 = (box.max[k] - a[k]) / d;
        if (t0 > t1) std::swap(t0, t1);
        lo = std::max(lo, t0);
        hi = std::min(hi, t1);
        if (lo > hi) return false;
    }
    return true;
}

/// Offsets of the control points that bend the straight line around each obstacle it crosses,
/// one per side in the plane normal to the line.
std::vector<std::vector<Vec3>> detour_starts(const Vec3& start, const Vec3& target, const Scene& scene,
                                             const std::vector<double>& greville) {
    std::vector<std::vector<Vec3>> out;
    const Vec3 d = target - start;
    const double len = d.norm();
    const Vec3 e = d * (1.0 / len);
    const Vec3 ref = std::abs(e.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
    const Vec3 n1 = (ref - e * ref.dot(e)).normalized();
    const Vec3 n2 = e.cross(n1);
    for (const Box& box : scene.obstacles) {
        if (!segment_hits(box, start, target)) continue;
        double ua = 1.0, ub = 0.0;
        std::array<double, 4> reach{};  // farthest corner beyond the line along +n1, -n1, +n2, -n2
        for (int c = 0; c < 8; ++c) {
            const Vec3 q{c & 1 ? box.max.x : box.min.x, c & 2 ? box.max.y : box.min.y, c & 4 ? box.max.z : box.min.z};
            const Vec3 r = q - start;
            const double u = std::clamp(r.dot(e) / len, 0.0, 1.0);
            ua = std::min(ua, u);
            ub = std::max(ub, u);
            reach[0] = std::max(reach[0], r.dot(n1));
            reach[1] = std::max(reach[1], -r.dot(n1));
            reach[2] = std::max(reach[2], r.dot(n2));
            reach[3] = std::max(reach[3], -r.dot(n2));
        }
        const std::array<Vec3, 4> dirs{n1, n1 * -1.0, n2, n2 * -1.0};
        for (std::size_t s = 0; s < 4; ++s) {
            const double amount = reach[s] + kDetourMargin;
            std::vector<Vec3> off(greville.size());
            for (std::size_t j = 0; j < greville.size(); ++j) {
                const double g = greville[j];
                const double ramp = g < ua ? g / std::max(ua, 1e-9) : g > ub ? (1.0 - g) / std::max(1.0 - ub, 1e-9) : 1.0;
                off[j] = dirs[s] * (amount * std::clamp(ramp, 0.0, 1.0));
            }
            out.push_back(std::move(off));
        }
    }
    return out;
}

}  // namespace

OptimizeResult optimize(const Vec3& start, const Vec3& target, const FrozenFlow& flow, const Scene& scene,
                        const ZermeloConfig& config) {
    config.validate();
    const double dist = distance(start, target);
    if (!(dist > 0)) throw Error("invalid_argument", "start and target coincide");
    const double t_lo = dist / config.u_max;
    const double t0 = dist / (0.8 * config.u_max);

    const SplineTrajectory init = straight_line(start, target, t0, config);
    const std::size_t ncp = init.curve.control_points().size();
    const BasisTable tab =
        make_table(init.curve.knots(), config.degree, ncp, even_intervals(config.quadrature_points));

    // z = [C_1 .. C_{n-1}, s], T_f = t_lo + softplus(s); C_0 is pinned to the start.
    const Eigen::Index nv = Eigen::Index(3 * (ncp - 1) + 1);
    auto unpack = [&](const Eigen::VectorXd& z, std::vector<Vec3>& cps) {
        cps.resize(ncp);
        cps[0] = start;
        for (std::size_t j = 1; j < ncp; ++j)
            cps[j] = {z[Eigen::Index(3 * (j - 1))], z[Eigen::Index(3 * (j - 1) + 1)], z[Eigen::Index(3 * (j - 1) + 2)]};
        return t_lo + softplus(z[nv - 1]);
    };
    std::vector<Vec3> scratch;
    auto cost = [&](const Eigen::VectorXd& z) {
        const double T = unpack(z, scratch);
        return evaluate_cost(scratch, T, tab, flow, scene, target, config).total;
    };
    auto gradient = [&](const Eigen::VectorXd& z) {
        Eigen::VectorXd g(nv);
        Eigen::VectorXd zz = z;
        for (Eigen::Index i = 0; i < nv; ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(z[i]));
            zz[i] = z[i] + h;
            const double fp = cost(zz);
            zz[i] = z[i] - h;
            const double fm = cost(zz);
            zz[i] = z[i];
            g[i] = (fp - fm) / (2 * h);
        }
        return g;
    };

    Eigen::VectorXd z(nv);
    for (std::size_t j = 1; j < ncp; ++j)
        for (int a = 0; a < 3; ++a) z[Eigen::Index(3 * (j - 1) + std::size_t(a))] = init.curve.control_points()[j][a];
    z[nv - 1] = softplus_inverse(t0 - t_lo);

    OptimizeResult result;
    result.straight_cost = evaluate_cost(init.curve.control_points(), t0, tab, flow, scene, target, config);
    const Eigen::VectorXd z_straight = z;

    Rng rng(mix_seed(config.seed));
    for (std::size_t j = 1; j + 1 < ncp; ++j)
        for (int a = 0; a < 3; ++a)
            z[Eigen::Index(3 * (j - 1) + std::size_t(a))] += config.perturbation * dist * rng.uniform(-1.0, 1.0);

    if (cost(z) > result.straight_cost.total) z = z_straight;
    struct Run {
        Eigen::VectorXd z;
        double f = 0.0;
        std::vector<double> history;
        int iterations = 0;
        bool converged = false;
    };
    auto descend = [&](Eigen::VectorXd z) {
        Run run;
        double f = cost(z);
        run.history.push_back(f);
        Eigen::VectorXd g = gradient(z);
        Eigen::MatrixXd H = Eigen::MatrixXd::Identity(nv, nv) / std::max(1.0, g.lpNorm<Eigen::Infinity>());

        bool reset_once = false;
        for (int it = 0; it < config.max_iterations; ++it) {
            run.iterations = it + 1;
            if (g.lpNorm<Eigen::Infinity>() < config.gradient_tolerance) {
                run.converged = true;
                break;
            }
            Eigen::VectorXd p = -H * g;
            double slope = g.dot(p);
            if (!(slope < 0)) {
                H = Eigen::MatrixXd::Identity(nv, nv) / std::max(1.0, g.lpNorm<Eigen::Infinity>());
                p = -H * g;
                slope = g.dot(p);
            }
            double step = 1.0, f_new = f;
            Eigen::VectorXd z_new = z;
            bool accepted = false;
            for (int ls = 0; ls < 50; ++ls, step *= 0.5) {
                z_new = z + step * p;
                f_new = cost(z_new);
                if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                if (reset_once) {
                    run.converged = true;  // no descent direction left at numerical precision
                    break;
                }
                reset_once = true;
                H = Eigen::MatrixXd::Identity(nv, nv) / std::max(1.0, g.lpNorm<Eigen::Infinity>());
                continue;
            }
            reset_once = false;
            const Eigen::VectorXd g_new = gradient(z_new);
            const Eigen::VectorXd s = z_new - z;
            const Eigen::VectorXd y = g_new - g;
            const double sy = s.dot(y);
            if (sy > 1e-12 * s.norm() * y.norm()) {
                const double rho = 1.0 / sy;
                if (it == 0) H = Eigen::MatrixXd::Identity(nv, nv) * (sy / y.dot(y));
                const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(nv, nv);
                H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
            }
            const double rel = (f - f_new) / std::max(1.0, std::abs(f));
            z = z_new;
            f = f_new;
            g = g_new;
            run.history.push_back(f);
            if (rel < 1e-12 && g.lpNorm<Eigen::Infinity>() < 1e-3) {
                run.converged = true;
                break;
            }
        }
        run.z = z;
        run.f = f;
        return run;
    };

    Run best = descend(z);
    for (const auto& detour : detour_starts(start, target, scene, init.curve.greville())) {
        Eigen::VectorXd zd = z_straight;
        for (std::size_t j = 1; j + 1 < ncp; ++j)
            for (int a = 0; a < 3; ++a) zd[Eigen::Index(3 * (j - 1) + std::size_t(a))] += detour[j][a];
        Run run = descend(zd);
        if (run.f < best.f) best = std::move(run);
    }
    z = best.z;
    result.history = std::move(best.history);
    result.iterations = best.iterations;
    result.converged = best.converged;

    std::vector<Vec3> cps;
    const double T = unpack(z, cps);
    result.trajectory = {BSpline(std::move(cps), config.degree), T};
    result.cost = evaluate_cost(result.trajectory.curve.control_points(), T, tab, flow, scene, target, config);
    return result;
}

double path_clearance(const SplineTrajectory& traj, const Box& obstacle, int samples) {
    double best = std::numeric_limits<double>::infinity();
    for (int m = 0; m <= samples; ++m)
        best = std::min(best, obstacle.distance(traj.curve.evaluate(double(m) / samples)));
    return best;
}

double path_length(const SplineTrajectory& traj, int samples) {
    double len = 0.0;
    Vec3 prev = traj.curve.evaluate(0.0);
    for (int m = 1; m <= samples; ++m) {
        const Vec3 p = traj.curve.evaluate(double(m) / samples);
        len += distance(prev, p);
        prev = p;
    }
    return len;
}

env::Policy open_loop_policy(SplineTrajectory traj, FrozenFlow flow, double start_time) {
    return [traj = std::move(traj), flow = std::move(flow), start_time](const env::Observation&,
                                                                         const env::Environment& e) {
        const double dt = e.config().integrator.dt;
        const double t0 = e.state().t - start_time;
        const double T = traj.final_time;
        if (t0 >= T - 1e-12) return dynamics::ControlInput{};
        const double t1 = std::min(t0 + dt, T);
        const PlannedControl mid = planned_control(traj, flow, 0.5 * (t0 + t1));
        const PlannedControl end = planned_control(traj, flow, t1);
        dynamics::ControlInput c;
        c.thrust = mid.thrust * (t1 - t0) / dt;
        c.dpsi = dynamics::wrap_angle(end.psi - e.state().psi);
        c.dtheta = dynamics::wrap_angle(end.theta - e.state().theta);
        return c.clamped();
    };
}

env::EpisodeResult replay(const SplineTrajectory& traj, const FrozenFlow& plan_flow, env::Environment& environment,
                          const Vec3& target, std::size_t snapshot) {
    const PlannedControl c0 = planned_control(traj, plan_flow, 0.0);
    environment.reset_to(traj.position(0.0), target, c0.psi, c0.theta, snapshot);
    return env::run_from_current(environment, open_loop_policy(traj, plan_flow, environment.state().t));
}

GridFlow::GridFlow(const store::MeshMeta& mesh, store::GridSnapshot snapshot)
    : mesh_(mesh), spacing_(mesh.spacing()), snap_(std::move(snapshot)) {
    if (snap_.u.size() != mesh_.point_count() || snap_.v.size() != mesh_.point_count() ||
        snap_.w.size() != mesh_.point_count())
        throw Error("dimension_mismatch", "snapshot does not match grid_dims");
}

Vec3 GridFlow::operator()(const Vec3& p) const {
    const auto& g = mesh_.grid_dims;
    std::array<std::size_t, 3> i0{};
    std::array<double, 3> f{};
    for (int a = 0; a < 3; ++a) {
        const double rel = (std::clamp(p[a], mesh_.domain_min[a], mesh_.domain_max[a]) - mesh_.domain_min[a]) / spacing_[a];
        const auto cell = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(std::floor(rel)), 0, std::ptrdiff_t(g[a]) - 2);
        i0[a] = std::size_t(cell);
        f[a] = std::clamp(rel - double(cell), 0.0, 1.0);
    }
    Vec3 out;
    for (int c = 0; c < 2; ++c)
        for (int b = 0; b < 2; ++b)
            for (int a = 0; a < 2; ++a) {
                const double wt = (a ? f[0] : 1 - f[0]) * (b ? f[1] : 1 - f[1]) * (c ? f[2] : 1 - f[2]);
                const std::size_t n = (i0[0] + std::size_t(a)) + g[0] * ((i0[1] + std::size_t(b)) + g[1] * (i0[2] + std::size_t(c)));
                out += Vec3{snap_.u[n], snap_.v[n], snap_.w[n]} * wt;
            }
    return out;
}

nlohmann::json to_json(const SplineTrajectory& traj, int samples) {
    nlohmann::json cps = nlohmann::json::array();
    for (const auto& c : traj.curve.control_points()) cps.push_back(c.to_array());
    nlohmann::json path = nlohmann::json::array();
    for (int m = 0; m <= samples; ++m) {
        const double t = traj.final_time * double(m) / samples;
        path.push_back({{"t", t}, {"position", traj.position(t).to_array()}});
    }
    return {{"degree", traj.curve.degree()},
            {"knots", traj.curve.knots()},
            {"control_points", cps},
            {"final_time", traj.final_time},
            {"path", path}};
}

nlohmann::json to_json(const CostBreakdown& c) {
    return {{"time", c.time},         {"control", c.control}, {"obstacle", c.obstacle},
            {"terminal", c.terminal}, {"bounds", c.bounds},   {"total", c.total}};
}

}  // namespace flownav::zermelo
