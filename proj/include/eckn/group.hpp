#pragma once

#include <Eigen/Core>
#include <memory>
#include <variant>
#include <vector>

#include "eckn/error.hpp"

namespace eckn {

enum class GroupKind { SE2, SO3, SE3, S2 };

const char* group_kind_name(GroupKind kind);
GroupKind group_kind_from_name(const std::string& name);

// Wrap an angle into [0, 2*pi).
double wrap_angle(double a);
// Wrap an angle difference into (-pi, pi].
double wrap_signed(double a);

// Planar roto-translation: x' = R(theta) x + (tx, ty).
struct Se2 {
    double tx = 0.0;
    double ty = 0.0;
    double theta = 0.0; // [0, 2*pi)
};

// 3D rotation, ZYZ Euler angles with the rotation matrix cached.
// R = Rz(alpha) * Ry(beta) * Rz(gamma), alpha/gamma in [0, 2*pi), beta in [0, pi].
struct So3 {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
};

// Rigid motion in 3D: x' = R x + v.
struct Se3 {
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    So3 rot;
};

// Point on the unit sphere, colatitude beta in [0, pi], longitude phi in [0, 2*pi).
// As a coset representative it stands for rep(p) = Rz(phi) * Ry(beta); the
// "identity" of this variant is the north pole.
struct S2Point {
    double beta = 0.0;
    double phi = 0.0;
};

class GroupElement {
public:
    GroupElement() : data_(Se2{}) {}

    static GroupElement se2(double tx, double ty, double theta);
    static GroupElement so3(double alpha, double beta, double gamma);
    static GroupElement so3_from_matrix(const Eigen::Matrix3d& R);
    static GroupElement se3(const Eigen::Vector3d& v, const GroupElement& rotation);
    static GroupElement s2(double beta, double phi);
    static GroupElement s2_from_unit(const Eigen::Vector3d& u);
    static GroupElement identity(GroupKind kind);

    GroupKind kind() const;

    const Se2& as_se2() const;
    const So3& as_so3() const;
    const Se3& as_se3() const;
    const S2Point& as_s2() const;

    // Unit vector for S2 points.
    Eigen::Vector3d s2_unit() const;

    bool approx_equal(const GroupElement& other, double tol) const;

private:
    explicit GroupElement(std::variant<Se2, So3, Se3, S2Point> d) : data_(std::move(d)) {}
    std::variant<Se2, So3, Se3, S2Point> data_;
};

// Group composition. Both elements must share a variant; for S2 the
// "composition" is rep(g) acting on h as a sphere point (coset section).
GroupElement compose(const GroupElement& g, const GroupElement& h);

GroupElement inverse(const GroupElement& g);

// Action on a base-space point (dim 2 for SE2, dim 3 otherwise).
Eigen::VectorXd act_on_point(const GroupElement& g, const Eigen::VectorXd& u);

// Rotation angle of an SO3 element (geodesic distance from identity).
double rotation_angle(const So3& r);

// A finite sample of a group / homogeneous space with normalized Haar weights.
//
// Enumeration (row-major):
//   SE2: index = (y*width + x)*n_theta + t,  element (x, y, 2*pi*t/n_theta)
//   S2:  index = i*n_phi + j,                beta_i = pi*(i+0.5)/n_beta, phi_j = 2*pi*j/n_phi
//   SO3: index = (i*n_beta + j)*n_gamma + k, alpha_i, beta_j (half-offset), gamma_k
//
// SE2 translations are toroidal (wraparound), which makes the discrete
// translation subgroup exact.
struct DiscretizedGroup {
    GroupKind kind = GroupKind::SE2;
    std::vector<GroupElement> elements;
    std::vector<double> haar_weights; // strictly positive, sum to 1

    // SE2 descriptor
    int height = 0, width = 0, n_theta = 0;
    // S2 descriptor
    int n_beta = 0, n_phi = 0;
    // SO3 descriptor (n_beta shared with S2 slot)
    int n_alpha = 0, n_gamma = 0;

    std::size_t size() const { return elements.size(); }

    std::size_t se2_index(int x, int y, int t) const;
    std::size_t s2_index(int i, int j) const;
    std::size_t so3_index(int i, int j, int k) const;

    // Representative grid step of the base space (1 pixel for SE2,
    // pi/n_beta radians for S2 and SO3). Pooling scales are expressed in
    // these units.
    double grid_step() const;
};

using GroupPtr = std::shared_ptr<const DiscretizedGroup>;

// dims: SE2 (height, width, n_theta); S2 (n_beta, n_phi); SO3 (n_alpha, n_beta, n_gamma).
GroupPtr build_group(GroupKind kind, const std::vector<int>& dims);

// Patch shape: group offsets centered at the identity, with normalized
// per-patch quadrature weights. offsets[0] is always the identity.
struct PatchShape {
    std::vector<GroupElement> offsets;
    std::vector<double> weights; // sum to 1
    double kappa = 0.0;
    double radius = 0.0;     // kappa * sigma_prev * step at build time
    double step = 1.0;       // grid step the radius was expressed in
    bool degenerate = false; // radius below one grid step -> identity only
    bool fiber_offsets = false;

    std::size_t size() const { return offsets.size(); }
    // sup_{c in S} |c| in base-space units (Euclidean norm for SE2,
    // geodesic/rotation angle for S2/SO3).
    double max_offset_magnitude() const;
};

// Spatial offsets within radius kappa*sigma_prev, identity fiber component.
// With fiber_offsets set (SO3 grids) the offsets are small rotations near the
// identity instead.
PatchShape build_patch_shape(const DiscretizedGroup& group, double kappa, double sigma_prev,
                             bool fiber_offsets = false);

// Throws ShapeError if the patch violates sup|c| <= kappa*sigma_prev.
void validate_patch(const PatchShape& patch, double kappa, double sigma_prev);

} // namespace eckn
