#include "leakloc/solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "leakloc/error.hpp"

namespace leakloc {

namespace {

constexpr double kFlowExponent = 1.852;
constexpr double kSecondsPerHour = 3600.0;

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

}  // namespace

void SolverSettings::validate() const {
    if (max_iterations < 1) throw Error("solver needs at least one iteration");
    if (!(flow_tolerance > 0.0)) throw Error("flow tolerance must be positive");
    if (!(regularization_flow > 0.0)) throw Error("regularization flow must be positive");
    if (!(initial_velocity >= 0.0)) throw Error("initial velocity must be non-negative");
}

double hazen_williams_resistance(double length_m, double diameter_mm, double roughness) {
    const double d = diameter_mm / 1000.0;
    return 10.667 * std::pow(roughness, -kFlowExponent) * std::pow(d, -4.871) * length_m;
}

// Per-call linear algebra state. The sparsity pattern is fixed by topology, so
// the symbolic analysis runs once and each Newton iteration only refactorizes.
struct HydraulicSolver::Workspace {
    SparseMatrix matrix;
    // Offsets into matrix.valuePtr() for each link: (from,from) (to,to) (from,to) (to,from); -1 if absent.
    std::vector<std::array<int, 4>> slots;
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower> factor;
    bool analyzed = false;

    explicit Workspace(const HydraulicSolver& solver) {
        const std::size_t n = solver.junctions_;
        std::vector<Eigen::Triplet<double, int>> entries;
        for (std::size_t i = 0; i < n; ++i) entries.emplace_back(static_cast<int>(i), static_cast<int>(i), 0.0);
        for (const auto& link : solver.links_) {
            if (link.from < n && link.to < n) {
                entries.emplace_back(static_cast<int>(link.from), static_cast<int>(link.to), 0.0);
                entries.emplace_back(static_cast<int>(link.to), static_cast<int>(link.from), 0.0);
            }
        }
        matrix.resize(static_cast<int>(n), static_cast<int>(n));
        matrix.setFromTriplets(entries.begin(), entries.end());
        matrix.makeCompressed();

        auto offset = [&](std::size_t row, std::size_t col) -> int {
            if (row >= n || col >= n) return -1;
            return static_cast<int>(&matrix.coeffRef(static_cast<int>(row), static_cast<int>(col)) -
                                    matrix.valuePtr());
        };
        slots.reserve(solver.links_.size());
        for (const auto& link : solver.links_)
            slots.push_back({offset(link.from, link.from), offset(link.to, link.to), offset(link.from, link.to),
                             offset(link.to, link.from)});
    }
};

HydraulicSolver::HydraulicSolver(const HydraulicModel& model, SolverSettings settings)
    : settings_(settings),
      junctions_(model.junction_count()),
      reservoirs_(model.reservoir_count()),
      pipe_count_(model.pipes().size()) {
    settings_.validate();
    if (auto cut = model.first_unreachable_junction())
        throw SolverError("junction '" + model.label(*cut) + "' is disconnected from every reservoir");

    elevations_.resize(node_count());
    for (std::size_t i = 0; i < node_count(); ++i) elevations_[i] = model.elevation(NodeId{i});
    for (const auto& j : model.junctions()) junction_labels_.push_back(j.label);

    for (std::size_t k = 0; k < model.pipes().size(); ++k) {
        const auto& p = model.pipes()[k];
        if (p.status != PipeStatus::open) continue;
        const double d = p.diameter_mm / 1000.0;
        const double area = std::numbers::pi * d * d / 4.0;
        links_.push_back(Link{k, p.from.index, p.to.index, hazen_williams_resistance(p.length, p.diameter_mm, p.roughness),
                              settings_.initial_velocity * area});
    }
}

StepResult HydraulicSolver::solve_step(std::span<const double> junction_demands,
                                       std::span<const double> reservoir_heads) const {
    Workspace work(*this);
    return solve_step(work, junction_demands, reservoir_heads);
}

StepResult HydraulicSolver::solve_step(Workspace& work, std::span<const double> junction_demands,
                                       std::span<const double> reservoir_heads) const {
    const std::size_t n = junctions_;
    if (junction_demands.size() != n) throw Error("demand vector length does not match the junction count");
    if (reservoir_heads.size() != reservoirs_) throw Error("head vector length does not match the reservoir count");
    std::vector<double> demand(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = junction_demands[i];
        if (!std::isfinite(d) || d < 0.0)
            throw Error("junction '" + junction_labels_[i] + "' has a negative or non-finite demand");
        demand[i] = d / kSecondsPerHour;
    }

    std::vector<double> heads(node_count(), 0.0);
    for (std::size_t r = 0; r < reservoirs_; ++r) heads[n + r] = reservoir_heads[r];

    std::vector<double> q(links_.size());
    for (std::size_t k = 0; k < links_.size(); ++k) q[k] = links_[k].initial_flow;

    std::vector<double> p(links_.size());
    std::vector<double> y(links_.size());
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    Eigen::VectorXd solution;
    const double q_eps = settings_.regularization_flow;

    StepResult result;
    bool met = false;
    for (std::size_t iter = 1; iter <= settings_.max_iterations; ++iter) {
        // Linearize headloss about the current flows: p = 1/h'(q), y = p h(q).
        std::fill(work.matrix.valuePtr(), work.matrix.valuePtr() + work.matrix.nonZeros(), 0.0);
        for (std::size_t i = 0; i < n; ++i) rhs[static_cast<Eigen::Index>(i)] = -demand[i];
        for (std::size_t k = 0; k < links_.size(); ++k) {
            const auto& link = links_[k];
            // Below q_eps the headloss is continued linearly so that Newton steps do not stall at zero flow.
            const double scale = link.resistance * std::pow(std::max(std::abs(q[k]), q_eps), kFlowExponent - 1.0);
            const double gradient = kFlowExponent * scale;
            const double loss = scale * q[k];
            p[k] = 1.0 / gradient;
            y[k] = p[k] * loss;
            const double carried = q[k] - y[k];
            const auto& slot = work.slots[k];
            double* values = work.matrix.valuePtr();
            if (link.from < n) {
                values[slot[0]] += p[k];
                rhs[static_cast<Eigen::Index>(link.from)] -= carried;
                if (link.to >= n) rhs[static_cast<Eigen::Index>(link.from)] += p[k] * heads[link.to];
            }
            if (link.to < n) {
                values[slot[1]] += p[k];
                rhs[static_cast<Eigen::Index>(link.to)] += carried;
                if (link.from >= n) rhs[static_cast<Eigen::Index>(link.to)] += p[k] * heads[link.from];
            }
            if (slot[2] >= 0) {
                values[slot[2]] -= p[k];
                values[slot[3]] -= p[k];
            }
        }

        if (n > 0) {
            if (!work.analyzed) {
                work.factor.analyzePattern(work.matrix);
                work.analyzed = true;
            }
            work.factor.factorize(work.matrix);
            if (work.factor.info() != Eigen::Success) throw SolverError("singular head system");
            solution = work.factor.solve(rhs);
            for (std::size_t i = 0; i < n; ++i) heads[i] = solution[static_cast<Eigen::Index>(i)];
        }

        double change = 0.0;
        double total = 0.0;
        double head_scale = 1.0;
        for (double hd : heads) head_scale = std::max(head_scale, std::abs(hd));
        // Flow change that rounding of the heads alone can produce.
        const double head_rounding = 16.0 * std::numeric_limits<double>::epsilon() * head_scale;
        double rounding_floor = 0.0;
        for (std::size_t k = 0; k < links_.size(); ++k) {
            const auto& link = links_[k];
            const double next = q[k] - y[k] + p[k] * (heads[link.from] - heads[link.to]);
            change += std::abs(next - q[k]);
            total += std::abs(next);
            rounding_floor += p[k] * head_rounding;
            q[k] = next;
        }
        if (!std::isfinite(change)) throw SolverError("solution diverged", change);
        result.iterations = iter;
        result.relative_change = change / std::max(total, q_eps);
        // One more step once the tolerance is met: the energy residual of a
        // Newton iterate is of the order of its last flow change.
        if (met) break;
        met = result.relative_change < settings_.flow_tolerance || change <= rounding_floor;
    }
    result.converged = met;
    if (!result.converged)
        throw SolverError("no convergence after " + std::to_string(settings_.max_iterations) +
                              " iterations (relative flow change " + std::to_string(result.relative_change) + ")",
                          result.relative_change);

    result.flows.assign(pipe_count_, 0.0);
    for (std::size_t k = 0; k < links_.size(); ++k) result.flows[links_[k].pipe] = q[k];
    for (std::size_t i = 0; i < n; ++i)
        if (heads[i] - elevations_[i] < 0.0) result.negative_pressure = true;
    result.heads = std::move(heads);
    return result;
}

SolveResult HydraulicSolver::solve(const DemandMatrix& demands, const HeadSchedule& heads) const {
    if (demands.rows() != node_count() || demands.junction_rows() != junctions_)
        throw Error("demand matrix does not match the model");
    if (heads.reservoirs() != reservoirs_) throw Error("head schedule does not match the reservoir count");
    const std::size_t steps = demands.steps();
    if (heads.steps() != 1 && heads.steps() != steps)
        throw Error("head schedule has " + std::to_string(heads.steps()) + " steps, demands have " +
                    std::to_string(steps));

    std::vector<NodeId> rows(node_count());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = NodeId{i};

    SolveResult out;
    out.pressures = PressureMatrix(std::move(rows), steps);
    out.converged = true;
    Workspace work(*this);
    std::vector<double> head_column(reservoirs_);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t r = 0; r < reservoirs_; ++r) head_column[r] = heads.head(r, t);
        StepResult step;
        try {
            step = solve_step(work, demands.junction_column(t), head_column);
        } catch (const SolverError& e) {
            throw SolverError("step " + std::to_string(t) + ": " + e.what(), e.residual_norm());
        } catch (const Error& e) {
            throw Error("step " + std::to_string(t) + ": " + e.what());
        }
        for (std::size_t i = 0; i < junctions_; ++i) out.pressures.at(i, t) = step.heads[i] - elevations_[i];
        out.iterations_used = std::max(out.iterations_used, step.iterations);
        out.negative_pressure = out.negative_pressure || step.negative_pressure;
        out.steps.push_back(std::move(step));
    }
    return out;
}

PressureMatrix HydraulicSolver::simulate(const DemandMatrix& demands, const HeadSchedule& heads) const {
    return solve(demands, heads).pressures;
}

StepResult solve_step(const HydraulicModel& model, std::span<const double> junction_demands,
                      std::span<const double> reservoir_heads, const SolverSettings& settings) {
    return HydraulicSolver(model, settings).solve_step(junction_demands, reservoir_heads);
}

PressureMatrix simulate(const HydraulicModel& model, const DemandMatrix& demands, const HeadSchedule& heads,
                        const SolverSettings& settings) {
    return HydraulicSolver(model, settings).simulate(demands, heads);
}

}  // namespace leakloc
