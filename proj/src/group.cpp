#include "eckn/group.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace eckn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGimbalTol = 1e-9;

Eigen::Matrix3d rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d m;
    m << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    return m;
}

Eigen::Matrix3d rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d m;
    m << c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c;
    return m;
}

So3 so3_from_angles(double alpha, double beta, double gamma) {
    So3 r;
    r.alpha = wrap_angle(alpha);
    r.beta = beta;
    r.gamma = wrap_angle(gamma);
    // canonicalize: beta in [0, pi]
    if (r.beta < 0.0 || r.beta > std::numbers::pi) {
        // fold via the matrix route
        const Eigen::Matrix3d m = rot_z(alpha) * rot_y(beta) * rot_z(gamma);
        r.rot = m;
        // extraction below fixes the angles
        const double cb = std::clamp(m(2, 2), -1.0, 1.0);
        r.beta = std::acos(cb);
        const double sb = std::sin(r.beta);
        if (sb < kGimbalTol) {
            r.alpha = 0.0;
            r.gamma = m(2, 2) > 0.0 ? wrap_angle(std::atan2(m(1, 0), m(0, 0)))
                                    : wrap_angle(std::atan2(m(0, 1), m(1, 1)));
        } else {
            r.alpha = wrap_angle(std::atan2(m(1, 2), m(0, 2)));
            r.gamma = wrap_angle(std::atan2(m(2, 1), -m(2, 0)));
        }
        return r;
    }
    if (r.beta < kGimbalTol) {
        // gimbal convention: fold alpha into gamma
        r.gamma = wrap_angle(r.gamma + r.alpha);
        r.alpha = 0.0;
    }
    r.rot = rot_z(r.alpha) * rot_y(r.beta) * rot_z(r.gamma);
    return r;
}

So3 so3_from_rotation(const Eigen::Matrix3d& m) {
    So3 r;
    r.rot = m;
    const double cb = std::clamp(m(2, 2), -1.0, 1.0);
    r.beta = std::acos(cb);
    const double sb = std::sin(r.beta);
    if (sb < kGimbalTol) {
        r.alpha = 0.0;
        if (m(2, 2) > 0.0) { // beta ~ 0: pure z-rotation
            r.beta = 0.0;
            r.gamma = wrap_angle(std::atan2(m(1, 0), m(0, 0)));
        } else { // beta ~ pi
            r.beta = std::numbers::pi;
            r.gamma = wrap_angle(std::atan2(m(0, 1), m(1, 1)));
        }
    } else {
        r.alpha = wrap_angle(std::atan2(m(1, 2), m(0, 2)));
        r.gamma = wrap_angle(std::atan2(m(2, 1), -m(2, 0)));
    }
    return r;
}

[[noreturn]] void variant_mismatch(const char* op) {
    throw ShapeError(std::string(op) + ": group element variants do not match");
}

} // namespace

const char* group_kind_name(GroupKind kind) {
    switch (kind) {
    case GroupKind::SE2: return "se2";
    case GroupKind::SO3: return "so3";
    case GroupKind::SE3: return "se3";
    case GroupKind::S2: return "s2";
    }
    return "?";
}

GroupKind group_kind_from_name(const std::string& name) {
    if (name == "se2") return GroupKind::SE2;
    if (name == "so3") return GroupKind::SO3;
    if (name == "se3") return GroupKind::SE3;
    if (name == "s2") return GroupKind::S2;
    throw ConfigError("unknown group kind '" + name + "'");
}

double wrap_angle(double a) {
    double w = a - kTwoPi * std::floor(a / kTwoPi);
    if (w >= kTwoPi) w -= kTwoPi;
    if (w < 0.0) w += kTwoPi;
    return w;
}

double wrap_signed(double a) {
    double w = wrap_angle(a);
    if (w > std::numbers::pi) w -= kTwoPi;
    return w;
}

GroupElement GroupElement::se2(double tx, double ty, double theta) {
    return GroupElement(Se2{tx, ty, wrap_angle(theta)});
}

GroupElement GroupElement::so3(double alpha, double beta, double gamma) {
    return GroupElement(so3_from_angles(alpha, beta, gamma));
}

GroupElement GroupElement::so3_from_matrix(const Eigen::Matrix3d& R) {
    return GroupElement(so3_from_rotation(R));
}

GroupElement GroupElement::se3(const Eigen::Vector3d& v, const GroupElement& rotation) {
    if (rotation.kind() != GroupKind::SO3) variant_mismatch("se3");
    return GroupElement(Se3{v, rotation.as_so3()});
}

GroupElement GroupElement::s2(double beta, double phi) {
    S2Point p;
    p.beta = std::clamp(beta, 0.0, std::numbers::pi);
    p.phi = p.beta < kGimbalTol || p.beta > std::numbers::pi - kGimbalTol ? 0.0 : wrap_angle(phi);
    return GroupElement(p);
}

GroupElement GroupElement::s2_from_unit(const Eigen::Vector3d& u) {
    const double beta = std::atan2(std::hypot(u.x(), u.y()), u.z());
    const double phi = std::atan2(u.y(), u.x());
    return s2(beta, phi);
}

GroupElement GroupElement::identity(GroupKind kind) {
    switch (kind) {
    case GroupKind::SE2: return se2(0.0, 0.0, 0.0);
    case GroupKind::SO3: return so3(0.0, 0.0, 0.0);
    case GroupKind::SE3: return se3(Eigen::Vector3d::Zero(), so3(0.0, 0.0, 0.0));
    case GroupKind::S2: return s2(0.0, 0.0);
    }
    throw ShapeError("identity: unknown kind");
}

GroupKind GroupElement::kind() const {
    switch (data_.index()) {
    case 0: return GroupKind::SE2;
    case 1: return GroupKind::SO3;
    case 2: return GroupKind::SE3;
    default: return GroupKind::S2;
    }
}

const Se2& GroupElement::as_se2() const {
    if (!std::holds_alternative<Se2>(data_)) variant_mismatch("as_se2");
    return std::get<Se2>(data_);
}

const So3& GroupElement::as_so3() const {
    if (!std::holds_alternative<So3>(data_)) variant_mismatch("as_so3");
    return std::get<So3>(data_);
}

const Se3& GroupElement::as_se3() const {
    if (!std::holds_alternative<Se3>(data_)) variant_mismatch("as_se3");
    return std::get<Se3>(data_);
}

const S2Point& GroupElement::as_s2() const {
    if (!std::holds_alternative<S2Point>(data_)) variant_mismatch("as_s2");
    return std::get<S2Point>(data_);
}

Eigen::Vector3d GroupElement::s2_unit() const {
    const S2Point& p = as_s2();
    const double sb = std::sin(p.beta);
    return {sb * std::cos(p.phi), sb * std::sin(p.phi), std::cos(p.beta)};
}

bool GroupElement::approx_equal(const GroupElement& other, double tol) const {
    if (kind() != other.kind()) return false;
    switch (kind()) {
    case GroupKind::SE2: {
        const Se2 &a = as_se2(), &b = other.as_se2();
        return std::abs(a.tx - b.tx) <= tol && std::abs(a.ty - b.ty) <= tol &&
               std::abs(wrap_signed(a.theta - b.theta)) <= tol;
    }
    case GroupKind::SO3:
        return (as_so3().rot - other.as_so3().rot).cwiseAbs().maxCoeff() <= tol;
    case GroupKind::SE3: {
        const Se3 &a = as_se3(), &b = other.as_se3();
        return (a.v - b.v).cwiseAbs().maxCoeff() <= tol &&
               (a.rot.rot - b.rot.rot).cwiseAbs().maxCoeff() <= tol;
    }
    case GroupKind::S2:
        return (s2_unit() - other.s2_unit()).cwiseAbs().maxCoeff() <= tol;
    }
    return false;
}

GroupElement compose(const GroupElement& g, const GroupElement& h) {
    if (g.kind() != h.kind()) variant_mismatch("compose");
    switch (g.kind()) {
    case GroupKind::SE2: {
        const Se2 &a = g.as_se2(), &b = h.as_se2();
        const double c = std::cos(a.theta), s = std::sin(a.theta);
        return GroupElement::se2(a.tx + c * b.tx - s * b.ty, a.ty + s * b.tx + c * b.ty,
                                 a.theta + b.theta);
    }
    case GroupKind::SO3:
        return GroupElement::so3_from_matrix(g.as_so3().rot * h.as_so3().rot);
    case GroupKind::SE3: {
        const Se3 &a = g.as_se3(), &b = h.as_se3();
        return GroupElement::se3(a.v + a.rot.rot * b.v,
                                 GroupElement::so3_from_matrix(a.rot.rot * b.rot.rot));
    }
    case GroupKind::S2: {
        // coset section: rep(g) = Rz(phi) Ry(beta) applied to h as a point
        const S2Point& a = g.as_s2();
        const Eigen::Vector3d u = (rot_z(a.phi) * rot_y(a.beta)) * h.s2_unit();
        return GroupElement::s2_from_unit(u);
    }
    }
    variant_mismatch("compose");
}

GroupElement inverse(const GroupElement& g) {
    switch (g.kind()) {
    case GroupKind::SE2: {
        const Se2& a = g.as_se2();
        const double c = std::cos(-a.theta), s = std::sin(-a.theta);
        return GroupElement::se2(-(c * a.tx - s * a.ty), -(s * a.tx + c * a.ty), -a.theta);
    }
    case GroupKind::SO3:
        return GroupElement::so3_from_matrix(g.as_so3().rot.transpose());
    case GroupKind::SE3: {
        const Se3& a = g.as_se3();
        const Eigen::Matrix3d rt = a.rot.rot.transpose();
        return GroupElement::se3(-(rt * a.v), GroupElement::so3_from_matrix(rt));
    }
    case GroupKind::S2: {
        // rep(g)^{-1} applied to the north pole
        const S2Point& a = g.as_s2();
        const Eigen::Vector3d u =
            (rot_y(-a.beta) * rot_z(-a.phi)) * Eigen::Vector3d(0.0, 0.0, 1.0);
        return GroupElement::s2_from_unit(u);
    }
    }
    variant_mismatch("inverse");
}

Eigen::VectorXd act_on_point(const GroupElement& g, const Eigen::VectorXd& u) {
    switch (g.kind()) {
    case GroupKind::SE2: {
        if (u.size() != 2) throw ShapeError("act_on_point: SE2 expects a 2D point");
        const Se2& a = g.as_se2();
        const double c = std::cos(a.theta), s = std::sin(a.theta);
        Eigen::VectorXd out(2);
        out << a.tx + c * u(0) - s * u(1), a.ty + s * u(0) + c * u(1);
        return out;
    }
    case GroupKind::SO3: {
        if (u.size() != 3) throw ShapeError("act_on_point: SO3 expects a 3D point");
        return g.as_so3().rot * Eigen::Vector3d(u(0), u(1), u(2));
    }
    case GroupKind::SE3: {
        if (u.size() != 3) throw ShapeError("act_on_point: SE3 expects a 3D point");
        const Se3& a = g.as_se3();
        return a.v + a.rot.rot * Eigen::Vector3d(u(0), u(1), u(2));
    }
    case GroupKind::S2: {
        if (u.size() != 3) throw ShapeError("act_on_point: S2 expects a 3D point");
        const S2Point& a = g.as_s2();
        return (rot_z(a.phi) * rot_y(a.beta)) * Eigen::Vector3d(u(0), u(1), u(2));
    }
    }
    variant_mismatch("act_on_point");
}

double rotation_angle(const So3& r) {
    const double c = std::clamp((r.rot.trace() - 1.0) * 0.5, -1.0, 1.0);
    return std::acos(c);
}

std::size_t DiscretizedGroup::se2_index(int x, int y, int t) const {
    const int xm = ((x % width) + width) % width;
    const int ym = ((y % height) + height) % height;
    const int tm = ((t % n_theta) + n_theta) % n_theta;
    return (static_cast<std::size_t>(ym) * width + xm) * n_theta + tm;
}

std::size_t DiscretizedGroup::s2_index(int i, int j) const {
    const int jm = ((j % n_phi) + n_phi) % n_phi;
    return static_cast<std::size_t>(i) * n_phi + jm;
}

std::size_t DiscretizedGroup::so3_index(int i, int j, int k) const {
    const int im = ((i % n_alpha) + n_alpha) % n_alpha;
    const int km = ((k % n_gamma) + n_gamma) % n_gamma;
    return (static_cast<std::size_t>(im) * n_beta + j) * n_gamma + km;
}

double DiscretizedGroup::grid_step() const {
    switch (kind) {
    case GroupKind::SE2: return 1.0;
    case GroupKind::S2:
    case GroupKind::SO3: return std::numbers::pi / n_beta;
    default: return 1.0;
    }
}

GroupPtr build_group(GroupKind kind, const std::vector<int>& dims) {
    for (int d : dims) {
        if (d <= 0) throw ShapeError("build_group: dimensions must be positive");
    }
    auto g = std::make_shared<DiscretizedGroup>();
    g->kind = kind;
    switch (kind) {
    case GroupKind::SE2: {
        if (dims.size() != 3) throw ShapeError("build_group: SE2 expects (height, width, n_theta)");
        g->height = dims[0];
        g->width = dims[1];
        g->n_theta = dims[2];
        const std::size_t n = static_cast<std::size_t>(g->height) * g->width * g->n_theta;
        g->elements.reserve(n);
        const double w = 1.0 / static_cast<double>(n);
        for (int y = 0; y < g->height; ++y)
            for (int x = 0; x < g->width; ++x)
                for (int t = 0; t < g->n_theta; ++t)
                    g->elements.push_back(GroupElement::se2(x, y, kTwoPi * t / g->n_theta));
        g->haar_weights.assign(n, w);
        break;
    }
    case GroupKind::S2: {
        if (dims.size() != 2) throw ShapeError("build_group: S2 expects (n_beta, n_phi)");
        g->n_beta = dims[0];
        g->n_phi = dims[1];
        double total = 0.0;
        for (int i = 0; i < g->n_beta; ++i) {
            const double beta = std::numbers::pi * (i + 0.5) / g->n_beta;
            const double w = std::sin(beta);
            for (int j = 0; j < g->n_phi; ++j) {
                g->elements.push_back(GroupElement::s2(beta, kTwoPi * j / g->n_phi));
                g->haar_weights.push_back(w);
                total += w;
            }
        }
        for (double& w : g->haar_weights) w /= total;
        break;
    }
    case GroupKind::SO3: {
        if (dims.size() != 3)
            throw ShapeError("build_group: SO3 expects (n_alpha, n_beta, n_gamma)");
        g->n_alpha = dims[0];
        g->n_beta = dims[1];
        g->n_gamma = dims[2];
        double total = 0.0;
        for (int i = 0; i < g->n_alpha; ++i) {
            const double alpha = kTwoPi * i / g->n_alpha;
            for (int j = 0; j < g->n_beta; ++j) {
                const double beta = std::numbers::pi * (j + 0.5) / g->n_beta;
                const double w = std::sin(beta);
                for (int k = 0; k < g->n_gamma; ++k) {
                    g->elements.push_back(GroupElement::so3(alpha, beta, kTwoPi * k / g->n_gamma));
                    g->haar_weights.push_back(w);
                    total += w;
                }
            }
        }
        for (double& w : g->haar_weights) w /= total;
        break;
    }
    case GroupKind::SE3:
        throw ShapeError("build_group: SE3 has no grid discretization (group algebra only)");
    }
    return g;
}

double PatchShape::max_offset_magnitude() const {
    double m = 0.0;
    for (const GroupElement& c : offsets) {
        switch (c.kind()) {
        case GroupKind::SE2: {
            const Se2& a = c.as_se2();
            m = std::max(m, std::hypot(a.tx, a.ty));
            break;
        }
        case GroupKind::S2:
            m = std::max(m, c.as_s2().beta);
            break;
        case GroupKind::SO3:
            m = std::max(m, rotation_angle(c.as_so3()));
            break;
        default:
            break;
        }
    }
    return m;
}

PatchShape build_patch_shape(const DiscretizedGroup& group, double kappa, double sigma_prev,
                             bool fiber_offsets) {
    if (kappa <= 0.0) throw ShapeError("build_patch_shape: kappa must be positive");
    if (sigma_prev <= 0.0) throw ShapeError("build_patch_shape: sigma_prev must be positive");

    PatchShape p;
    p.kappa = kappa;
    p.fiber_offsets = fiber_offsets;
    const double step = group.grid_step();
    const double radius = kappa * sigma_prev * step;
    p.radius = radius;
    p.step = step;

    switch (group.kind) {
    case GroupKind::SE2: {
        p.offsets.push_back(GroupElement::identity(GroupKind::SE2));
        if (radius >= 1.0) {
            // cap so toroidal offsets stay unambiguous
            const double rcap = std::min(radius, (std::min(group.width, group.height) - 1) / 2.0);
            const int r = static_cast<int>(std::floor(rcap));
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (std::hypot(dx, dy) <= rcap + 1e-12)
                        p.offsets.push_back(GroupElement::se2(dx, dy, 0.0));
                }
        }
        p.degenerate = p.offsets.size() == 1;
        p.weights.assign(p.offsets.size(), 1.0 / static_cast<double>(p.offsets.size()));
        break;
    }
    case GroupKind::S2: {
        p.offsets.push_back(GroupElement::identity(GroupKind::S2));
        // north pole sits between grid rings; give it half the first ring's colatitude
        p.weights.push_back(std::sin(std::numbers::pi / (4.0 * group.n_beta)));
        for (int i = 0; i < group.n_beta; ++i) {
            const double beta = std::numbers::pi * (i + 0.5) / group.n_beta;
            if (beta > radius + 1e-12) break;
            for (int j = 0; j < group.n_phi; ++j) {
                p.offsets.push_back(GroupElement::s2(beta, kTwoPi * j / group.n_phi));
                p.weights.push_back(std::sin(beta));
            }
        }
        p.degenerate = p.offsets.size() == 1;
        break;
    }
    case GroupKind::SO3: {
        p.offsets.push_back(GroupElement::identity(GroupKind::SO3));
        p.weights.push_back(std::sin(std::numbers::pi / (4.0 * group.n_beta)));
        if (fiber_offsets) {
            for (std::size_t e = 0; e < group.size(); ++e) {
                const So3& r = group.elements[e].as_so3();
                const double ang = rotation_angle(r);
                if (ang > 1e-12 && ang <= radius + 1e-12) {
                    p.offsets.push_back(group.elements[e]);
                    p.weights.push_back(std::sin(r.beta));
                }
            }
        }
        p.degenerate = p.offsets.size() == 1;
        break;
    }
    case GroupKind::SE3:
        throw ShapeError("build_patch_shape: SE3 grids are not supported");
    }

    double total = 0.0;
    for (double w : p.weights) total += w;
    for (double& w : p.weights) w /= total;
    return p;
}

void validate_patch(const PatchShape& patch, double kappa, double sigma_prev) {
    const double limit = kappa * sigma_prev * patch.step;
    const double m = patch.max_offset_magnitude();
    if (m > limit + 1e-12) {
        throw ShapeError("validate_patch: offset magnitude " + std::to_string(m) +
                         " exceeds kappa*sigma_prev = " + std::to_string(limit));
    }
}

} // namespace eckn
