#pragma once

// Uniform cell-centered finite volumes on an interval (1D) or axis-aligned
// rectangle (2D), homogeneous Neumann boundaries, subdomain bookkeeping, and
// the heterogeneous diffusion operator v -> div(kappa grad v).

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "seirdiff/errors.hpp"

namespace seirdiff {

using Field = std::vector<double>;

struct Domain {
    int dim = 1;
    std::array<double, 2> extent{1.0, 1.0};
    std::array<int, 2> cells{2, 1};

    static Domain line(double length, int nx) {
        Domain d;
        d.dim = 1;
        d.extent = {length, 1.0};
        d.cells = {nx, 1};
        d.validate();
        return d;
    }

    static Domain rectangle(double lx, double ly, int nx, int ny) {
        Domain d;
        d.dim = 2;
        d.extent = {lx, ly};
        d.cells = {nx, ny};
        d.validate();
        return d;
    }

    void validate() const {
        require(dim == 1 || dim == 2, "domain dimension must be 1 or 2");
        for (int a = 0; a < dim; ++a) {
            require(extent[a] > 0.0, "domain extent must be positive");
            require(cells[a] >= 2, "domain needs at least 2 cells per active axis");
        }
        if (dim == 1) require(cells[1] == 1, "1D domain must have a single cell row");
    }

    int cell_count() const { return cells[0] * cells[1]; }
    double spacing(int axis) const { return extent[axis] / cells[axis]; }
    double cell_volume() const {
        return dim == 1 ? spacing(0) : spacing(0) * spacing(1);
    }
    double measure() const { return dim == 1 ? extent[0] : extent[0] * extent[1]; }

    int index(int ix, int iy) const { return iy * cells[0] + ix; }

    std::array<double, 2> center(int c) const {
        const int ix = c % cells[0];
        const int iy = c / cells[0];
        return {(ix + 0.5) * spacing(0), dim == 2 ? (iy + 0.5) * spacing(1) : 0.5};
    }
};

struct TimeGrid {
    double final_time = 1.0;
    int steps = 1;

    TimeGrid() = default;
    TimeGrid(double T, int K) : final_time(T), steps(K) {
        require(final_time > 0.0, "final time must be positive");
        require(steps >= 1, "time grid needs at least one step");
    }

    double dt() const { return final_time / steps; }
    double time(int level) const { return level * dt(); }
};

// Axis-aligned box, half-open on each axis so adjacent boxes tile exactly.
struct Box {
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 1.0};

    bool contains(const std::array<double, 2>& p, int dim) const {
        for (int a = 0; a < dim; ++a)
            if (p[a] < lo[a] || p[a] >= hi[a]) return false;
        return true;
    }
};

// Disjoint cover of the domain by m regions plus the control-target mask.
struct SubdomainPartition {
    int region_count = 0;
    std::vector<int> label;           // per cell, 0-based region id
    std::vector<double> region_measure;
    std::vector<char> control_mask;   // 1 on cells of the control region
    double control_measure = 0.0;
};

// Labels cells by region-box membership (cell centers decide). Every cell must
// belong to exactly one region box; control boxes may overlap freely.
inline SubdomainPartition build_partition(const Domain& domain,
                                          const std::vector<Box>& regions,
                                          const std::vector<Box>& control_boxes) {
    require(!regions.empty(), "partition needs at least one region box");
    const int n = domain.cell_count();
    SubdomainPartition part;
    part.region_count = static_cast<int>(regions.size());
    part.label.assign(n, -1);
    part.region_measure.assign(regions.size(), 0.0);
    part.control_mask.assign(n, 0);

    const double vol = domain.cell_volume();
    for (int c = 0; c < n; ++c) {
        const auto p = domain.center(c);
        for (std::size_t j = 0; j < regions.size(); ++j) {
            if (!regions[j].contains(p, domain.dim)) continue;
            if (part.label[c] >= 0)
                throw validation_error("overlapping region boxes: cell " + std::to_string(c) +
                                       " lies in regions " + std::to_string(part.label[c] + 1) +
                                       " and " + std::to_string(j + 1));
            part.label[c] = static_cast<int>(j);
        }
        if (part.label[c] < 0)
            throw validation_error("region boxes do not cover cell " + std::to_string(c));
        part.region_measure[part.label[c]] += vol;
        for (const auto& b : control_boxes) {
            if (b.contains(p, domain.dim)) {
                part.control_mask[c] = 1;
                break;
            }
        }
        if (part.control_mask[c]) part.control_measure += vol;
    }
    for (std::size_t j = 0; j < part.region_measure.size(); ++j)
        require(part.region_measure[j] > 0.0,
                "region " + std::to_string(j + 1) + " contains no cells");
    return part;
}

// Interior face between two cells; geom = face area / center distance, so a
// face carries the flux T * (v_right - v_left) with T = geom * kappa_face.
struct Face {
    int left = 0;
    int right = 0;
    double geom = 0.0;
};

inline std::vector<Face> build_faces(const Domain& domain) {
    std::vector<Face> faces;
    const int nx = domain.cells[0], ny = domain.cells[1];
    const double dx = domain.spacing(0);
    if (domain.dim == 1) {
        faces.reserve(nx - 1);
        for (int i = 0; i + 1 < nx; ++i) faces.push_back({i, i + 1, 1.0 / dx});
        return faces;
    }
    const double dy = domain.spacing(1);
    faces.reserve(static_cast<std::size_t>((nx - 1) * ny + nx * (ny - 1)));
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix + 1 < nx; ++ix)
            faces.push_back({domain.index(ix, iy), domain.index(ix + 1, iy), dy / dx});
    for (int iy = 0; iy + 1 < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            faces.push_back({domain.index(ix, iy), domain.index(ix, iy + 1), dx / dy});
    return faces;
}

inline double harmonic_mean(double a, double b) { return 2.0 * a * b / (a + b); }

// Discrete div(kappa grad .) with face transmissibilities from the harmonic
// mean of the adjacent cell values. Applying it to the all-ones field gives
// exactly zero (no-flux boundary), it is symmetric in the volume-weighted
// inner product, and negative semi-definite.
class DiffusionOperator {
public:
    DiffusionOperator(const Domain& domain, const std::vector<Face>& faces, const Field& kappa)
        : faces_(faces), inv_volume_(1.0 / domain.cell_volume()) {
        require(static_cast<int>(kappa.size()) == domain.cell_count(),
                "kappa field size does not match grid");
        for (double k : kappa)
            require(k > 0.0 && std::isfinite(k), "nonpositive diffusion coefficient");
        trans_.resize(faces_.size());
        for (std::size_t f = 0; f < faces_.size(); ++f)
            trans_[f] = faces_[f].geom * harmonic_mean(kappa[faces_[f].left], kappa[faces_[f].right]);
        build_diag(domain.cell_count());
    }

    // Face transmissibilities given directly; used for the directional
    // derivative of the operator with respect to the controls (values may be
    // negative, so no positivity check).
    static DiffusionOperator from_face_values(const Domain& domain,
                                              const std::vector<Face>& faces,
                                              std::vector<double> trans) {
        return DiffusionOperator(domain, faces, std::move(trans), 0);
    }

    int size() const { return static_cast<int>(diag_.size()); }

    // out = div(kappa grad v), cellwise (already divided by cell volume)
    void apply(const Field& v, Field& out) const {
        out.assign(diag_.size(), 0.0);
        for (std::size_t f = 0; f < faces_.size(); ++f) {
            const double flux = trans_[f] * (v[faces_[f].right] - v[faces_[f].left]);
            out[faces_[f].left] += flux * inv_volume_;
            out[faces_[f].right] -= flux * inv_volume_;
        }
    }

    // sum_f T_f (a_R - a_L)(b_R - b_L) = <-(div kappa grad a), b>_V
    double bilinear(const Field& a, const Field& b) const {
        double sum = 0.0;
        for (std::size_t f = 0; f < faces_.size(); ++f)
            sum += trans_[f] * (a[faces_[f].right] - a[faces_[f].left]) *
                   (b[faces_[f].right] - b[faces_[f].left]);
        return sum;
    }

    // Positive diagonal of -div(kappa grad .), used by the Jacobi preconditioner.
    const Field& neg_diagonal() const { return diag_; }
    const std::vector<double>& transmissibility() const { return trans_; }
    const std::vector<Face>& faces() const { return faces_; }

private:
    DiffusionOperator(const Domain& domain, const std::vector<Face>& faces,
                      std::vector<double> trans, int)
        : faces_(faces), trans_(std::move(trans)), inv_volume_(1.0 / domain.cell_volume()) {
        require(trans_.size() == faces_.size(), "face value count does not match face count");
        build_diag(domain.cell_count());
    }

    void build_diag(int n) {
        diag_.assign(n, 0.0);
        for (std::size_t f = 0; f < faces_.size(); ++f) {
            diag_[faces_[f].left] += trans_[f] * inv_volume_;
            diag_[faces_[f].right] += trans_[f] * inv_volume_;
        }
    }

    std::vector<Face> faces_;
    std::vector<double> trans_;
    double inv_volume_;
    Field diag_;
};

inline double integrate(const Domain& domain, const Field& field) {
    require(static_cast<int>(field.size()) == domain.cell_count(),
            "field size does not match grid");
    double sum = 0.0;
    for (double v : field) sum += v;
    return sum * domain.cell_volume();
}

inline double integrate(const Domain& domain, const Field& field, const std::vector<char>& mask) {
    require(static_cast<int>(field.size()) == domain.cell_count(),
            "field size does not match grid");
    require(mask.size() == field.size(), "mask size does not match grid");
    double sum = 0.0;
    for (std::size_t c = 0; c < field.size(); ++c)
        if (mask[c]) sum += field[c];
    return sum * domain.cell_volume();
}

} // namespace seirdiff
