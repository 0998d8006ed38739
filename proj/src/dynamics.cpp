#include "activegp/dynamics.hpp"

#include <cmath>
#include <numbers>

#include "activegp/errors.hpp"

namespace activegp {

namespace {

using nlohmann::json;

Vector to_vector(const json& arr)
{
    Vector v(static_cast<Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
        v(static_cast<Index>(i)) = arr[i].get<double>();
    return v;
}

Box to_box(const json& arr)
{
    Box b{Vector(static_cast<Index>(arr.size())), Vector(static_cast<Index>(arr.size()))};
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_array() || arr[i].size() != 2)
            throw ContractViolation("bounds must be a list of [min, max] pairs");
        b.lower(static_cast<Index>(i)) = arr[i][0].get<double>();
        b.upper(static_cast<Index>(i)) = arr[i][1].get<double>();
    }
    return b;
}

// defaults merged with user-provided overrides, one level deep
json merged(const std::string& name, const json& overrides)
{
    json base = default_system_parameters().at(name);
    if (overrides.contains(name))
        base.merge_patch(overrides.at(name));
    return base;
}

SystemSpec spec_from(const std::string& name, const json& p, Index state_dim, Index control_dim)
{
    SystemSpec s;
    s.name = name;
    s.state_dim = state_dim;
    s.control_dim = control_dim;
    s.dt = p.at("dt").get<double>();
    s.noise_variance = p.at("noise_variance").get<double>();
    s.control_bounds = to_box(p.at("control_bounds"));
    s.region_of_interest = to_box(p.at("region_of_interest"));
    s.initial_state = to_vector(p.at("initial_state"));
    return s;
}

class Pendulum final : public DynamicalSystem {
public:
    explicit Pendulum(const json& p)
        : DynamicalSystem(spec_from("pendulum", p, 2, 1)), params_(p), m_(p.at("mass").get<double>()),
          l_(p.at("length").get<double>()), g_(p.at("gravity").get<double>()), b_(p.at("damping").get<double>())
    {
    }

    Vector derivative(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u) const override
    {
        Vector dx(2);
        dx(0) = x(1);
        dx(1) = (u(0) - b_ * x(1) - m_ * g_ * l_ * std::sin(x(0))) / (m_ * l_ * l_);
        return dx;
    }

    double energy(const Eigen::Ref<const Vector>& x) const override
    {
        return 0.5 * m_ * l_ * l_ * x(1) * x(1) + m_ * g_ * l_ * (1.0 - std::cos(x(0)));
    }

    json parameters() const override { return params_; }

private:
    json params_;
    double m_, l_, g_, b_;
};

// Two-link arm moving in the horizontal plane (no gravity), rigid-body form
// M(q) qdd + C(q, qd) qd + D qd = tau. State (q1, q2, qd1, qd2).
class TwoLinkArm final : public DynamicalSystem {
public:
    explicit TwoLinkArm(const json& p)
        : DynamicalSystem(spec_from("two_link", p, 4, 2)), params_(p), m1_(p.at("mass1").get<double>()),
          m2_(p.at("mass2").get<double>()), l1_(p.at("length1").get<double>()), l2_(p.at("length2").get<double>()),
          d1_(p.at("damping1").get<double>()), d2_(p.at("damping2").get<double>())
    {
        lc1_ = 0.5 * l1_;
        lc2_ = 0.5 * l2_;
        i1_ = m1_ * l1_ * l1_ / 12.0;
        i2_ = m2_ * l2_ * l2_ / 12.0;
    }

    Eigen::Matrix2d inertia(double q2) const
    {
        const double c2 = std::cos(q2);
        Eigen::Matrix2d m;
        m(0, 0) = m1_ * lc1_ * lc1_ + m2_ * (l1_ * l1_ + lc2_ * lc2_ + 2.0 * l1_ * lc2_ * c2) + i1_ + i2_;
        m(0, 1) = m2_ * (lc2_ * lc2_ + l1_ * lc2_ * c2) + i2_;
        m(1, 0) = m(0, 1);
        m(1, 1) = m2_ * lc2_ * lc2_ + i2_;
        return m;
    }

    Vector derivative(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u) const override
    {
        const double qd1 = x(2), qd2 = x(3);
        const double h = -m2_ * l1_ * lc2_ * std::sin(x(1));
        Eigen::Vector2d rhs;
        rhs(0) = u(0) + h * (2.0 * qd1 * qd2 + qd2 * qd2) - d1_ * qd1;
        rhs(1) = u(1) - h * qd1 * qd1 - d2_ * qd2;
        const Eigen::Vector2d qdd = inertia(x(1)).ldlt().solve(rhs);
        Vector dx(4);
        dx << qd1, qd2, qdd(0), qdd(1);
        return dx;
    }

    double energy(const Eigen::Ref<const Vector>& x) const override
    {
        const Eigen::Vector2d qd = x.tail<2>();
        return 0.5 * qd.dot(inertia(x(1)) * qd);
    }

    json parameters() const override { return params_; }

private:
    json params_;
    double m1_, m2_, l1_, l2_, d1_, d2_;
    double lc1_ = 0, lc2_ = 0, i1_ = 0, i2_ = 0;
};

// Cart with a hanging pole, tethered to the origin by a weak spring.
// State (p, theta, pd, thetad), theta = 0 pointing down.
class CartPole final : public DynamicalSystem {
public:
    explicit CartPole(const json& p)
        : DynamicalSystem(spec_from("cart_pole", p, 4, 1)), params_(p), mc_(p.at("cart_mass").get<double>()),
          mp_(p.at("pole_mass").get<double>()), l_(p.at("pole_length").get<double>()),
          g_(p.at("gravity").get<double>()), bc_(p.at("cart_damping").get<double>()),
          bp_(p.at("pole_damping").get<double>()), k_(p.at("cart_spring").get<double>())
    {
    }

    Vector derivative(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u) const override
    {
        const double s = std::sin(x(1)), c = std::cos(x(1));
        const double pd = x(2), td = x(3);
        Eigen::Matrix2d a;
        a << mc_ + mp_, mp_ * l_ * c, mp_ * l_ * c, mp_ * l_ * l_;
        Eigen::Vector2d rhs;
        rhs(0) = u(0) - bc_ * pd - k_ * x(0) + mp_ * l_ * s * td * td;
        rhs(1) = -bp_ * td - mp_ * g_ * l_ * s;
        const Eigen::Vector2d acc = a.ldlt().solve(rhs);
        Vector dx(4);
        dx << pd, td, acc(0), acc(1);
        return dx;
    }

    double energy(const Eigen::Ref<const Vector>& x) const override
    {
        const double c = std::cos(x(1));
        const double kinetic = 0.5 * (mc_ + mp_) * x(2) * x(2) + mp_ * l_ * x(2) * x(3) * c +
                               0.5 * mp_ * l_ * l_ * x(3) * x(3);
        return kinetic + mp_ * g_ * l_ * (1.0 - c) + 0.5 * k_ * x(0) * x(0);
    }

    json parameters() const override { return params_; }

private:
    json params_;
    double mc_, mp_, l_, g_, bc_, bp_, k_;
};

} // namespace

void SystemSpec::validate() const
{
    if (state_dim < 1 || control_dim < 1)
        throw ContractViolation(name + ": dimensions must be positive");
    control_bounds.validate("control_bounds");
    region_of_interest.validate("region_of_interest");
    if (control_bounds.dim() != control_dim || region_of_interest.dim() != state_dim)
        throw ContractViolation(name + ": bound dimensions do not match system dimensions");
    if (!(dt > 0.0))
        throw ContractViolation(name + ": dt must be positive");
    if (!(noise_variance >= 0.0))
        throw ContractViolation(name + ": noise variance must be non-negative");
    if (initial_state.size() != state_dim || !region_of_interest.contains(initial_state))
        throw ContractViolation(name + ": initial state must lie inside the region of interest");
}

void Trajectory::validate(const Box& control_bounds) const
{
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i > 0 && records[i].step != records[i - 1].step + 1)
            throw ContractViolation("trajectory steps are not consecutive");
        if (!control_bounds.contains(records[i].control))
            throw ContractViolation("trajectory control out of bounds");
    }
}

Vector true_step(const DynamicalSystem& system, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u,
                 long step)
{
    const SystemSpec& s = system.spec();
    if (x.size() != s.state_dim || u.size() != s.control_dim)
        throw ContractViolation("true_step: dimension mismatch for " + s.name);
    if (!x.allFinite())
        throw ContractViolation("true_step: non-finite state");
    if (!s.control_bounds.contains(u, 1e-12))
        throw ContractViolation("true_step: control out of bounds for " + s.name);

    const double h = s.dt;
    const Vector k1 = system.derivative(x, u);
    const Vector k2 = system.derivative(x + 0.5 * h * k1, u);
    const Vector k3 = system.derivative(x + 0.5 * h * k2, u);
    const Vector k4 = system.derivative(x + h * k3, u);
    Vector next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite())
        throw SimulationDivergence(s.name, step);
    return next;
}

Vector observe(const DynamicalSystem& system, const Eigen::Ref<const Vector>& x, std::mt19937_64& rng)
{
    const double sd = std::sqrt(system.spec().noise_variance);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector y = x;
    for (Index i = 0; i < y.size(); ++i)
        y(i) += sd * normal(rng);
    return y;
}

Trajectory rollout(const DynamicalSystem& system, const Eigen::Ref<const Vector>& x0,
                   const Eigen::Ref<const Matrix>& controls, std::mt19937_64& rng, long first_step)
{
    Trajectory traj;
    traj.records.reserve(static_cast<std::size_t>(controls.rows()));
    Vector x = x0;
    for (Index i = 0; i < controls.rows(); ++i) {
        TransitionRecord r;
        r.step = first_step + static_cast<long>(i);
        r.state = x;
        r.control = controls.row(i).transpose();
        r.next_state = true_step(system, x, r.control, r.step);
        r.observation = observe(system, r.next_state, rng);
        x = r.next_state;
        traj.records.push_back(std::move(r));
    }
    return traj;
}

std::vector<std::string> system_names()
{
    return {"pendulum", "two_link", "cart_pole"};
}

nlohmann::json default_system_parameters()
{
    constexpr double pi = std::numbers::pi;
    return json{
        {"version", 1},
        {"pendulum",
         {{"mass", 1.0},
          {"length", 0.6},
          {"gravity", 9.81},
          {"damping", 0.1},
          {"dt", 0.05},
          {"noise_variance", 0.05},
          {"control_bounds", {{-1.5, 1.5}}},
          {"region_of_interest", {{-pi, pi}, {-8.0, 8.0}}},
          {"initial_state", {0.0, 0.0}}}},
        {"two_link",
         {{"mass1", 1.0},
          {"mass2", 1.0},
          {"length1", 1.0},
          {"length2", 1.0},
          {"damping1", 0.5},
          {"damping2", 0.5},
          {"dt", 0.01},
          {"noise_variance", 0.05},
          {"control_bounds", {{-2.0, 2.0}, {-2.0, 2.0}}},
          {"region_of_interest", {{-pi, pi}, {-pi, pi}, {-4.0, 4.0}, {-4.0, 4.0}}},
          {"initial_state", {0.0, 0.0, 0.0, 0.0}}}},
        {"cart_pole",
         {{"cart_mass", 1.0},
          {"pole_mass", 0.2},
          {"pole_length", 0.5},
          {"gravity", 9.81},
          {"cart_damping", 1.0},
          {"pole_damping", 0.05},
          {"cart_spring", 1.0},
          {"dt", 0.05},
          {"noise_variance", 0.05},
          {"control_bounds", {{-5.0, 5.0}}},
          {"region_of_interest", {{-2.0, 2.0}, {-pi, pi}, {-4.0, 4.0}, {-8.0, 8.0}}},
          {"initial_state", {0.0, 0.0, 0.0, 0.0}}}},
    };
}

std::unique_ptr<DynamicalSystem> make_system(const std::string& name, const nlohmann::json& params)
{
    try {
        if (name == "pendulum")
            return std::make_unique<Pendulum>(merged(name, params));
        if (name == "two_link")
            return std::make_unique<TwoLinkArm>(merged(name, params));
        if (name == "cart_pole")
            return std::make_unique<CartPole>(merged(name, params));
    } catch (const json::exception& e) {
        throw ContractViolation("invalid parameters for system '" + name + "': " + e.what());
    }
    throw ContractViolation("unknown system '" + name + "'");
}

SystemDefaults system_defaults(const std::string& name)
{
    if (name == "pendulum")
        return {150, 15, 10};
    if (name == "two_link")
        return {250, 15, 6};
    if (name == "cart_pole")
        return {150, 15, 6};
    throw ContractViolation("unknown system '" + name + "'");
}

} // namespace activegp
