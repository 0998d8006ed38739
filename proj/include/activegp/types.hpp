#pragma once

#include <Eigen/Dense>

namespace activegp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Axis-aligned box, e.g. actuator limits or a region of interest.
struct Box {
    Vector lower;
    Vector upper;

    Index dim() const { return lower.size(); }
    Vector span() const { return upper - lower; }
    Vector center() const { return 0.5 * (lower + upper); }

    bool contains(const Eigen::Ref<const Vector>& v, double slack = 0.0) const
    {
        return v.size() == dim() && ((v.array() >= lower.array() - slack) && (v.array() <= upper.array() + slack)).all();
    }

    Vector clamp(const Eigen::Ref<const Vector>& v) const { return v.cwiseMax(lower).cwiseMin(upper); }

    /// Throws ContractViolation unless min < max in every dimension.
    void validate(const char* what) const;
};

} // namespace activegp
