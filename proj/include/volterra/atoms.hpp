// Pole grids, atom catalogs and the real-valued dictionary.
//
// Column layout of every dictionary-derived matrix: atom j (first-order atoms
// first, then second-order atoms) owns columns 2j (real part, u) and 2j+1
// (imaginary part, v); the constant atom owns the final column 2 * n_atoms.
// A real coefficient pair (u, v) stands for the complex coefficient
// c = u + jv paired with its conjugate.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "volterra/model.hpp"

namespace volterra {

/// Discretization of the compact pole set D (upper-half representatives).
struct PoleGrid {
    std::vector<Pole> poles;
    std::size_t radial_counts = 0;
    std::size_t angular_counts = 0;
    double min_radius = 0.0;
    double max_radius = 0.0;

    /// Largest distance between neighboring grid nodes: max(radial step,
    /// arc step at max_radius). Zero for a single node.
    double spacing() const;
};

PoleGrid build_grid(std::size_t radial_counts, std::size_t angular_counts, double min_radius,
                    double max_radius);

/// Union of `grid` and the upper-half representatives of `extra`; original
/// poles keep their indices, new ones are appended.
PoleGrid augment_grid(PoleGrid grid, std::span<const Pole> extra);

/// Which second-order pole pairs enter the catalog.
struct PairPolicy {
    enum class Kind { kNone, kAllPairs, kSampled };
    Kind kind = Kind::kSampled;
    std::size_t count = 0;  // kSampled only

    static PairPolicy none() { return {Kind::kNone, 0}; }
    static PairPolicy all_pairs() { return {Kind::kAllPairs, 0}; }
    static PairPolicy sampled(std::size_t m) { return {Kind::kSampled, m}; }

    std::string name() const;
    static PairPolicy parse(const std::string& name, std::size_t count);
};

struct AtomCatalog {
    std::vector<FirstOrderAtom> first_atoms;
    std::vector<SecondOrderAtom> second_atoms;
    double scale_alpha = 1.0;
    double scale_beta = 1.0;
    PairPolicy policy = PairPolicy::none();
    std::uint64_t seed = 0;

    std::size_t n_atoms() const { return first_atoms.size() + second_atoms.size(); }
    std::size_t n_groups() const { return n_atoms() + 1; }
    std::size_t n_columns() const { return 2 * n_atoms() + 1; }
    std::size_t constant_column() const { return 2 * n_atoms(); }
    std::size_t constant_group() const { return n_atoms(); }

    /// Whether atom j has a conjugate partner distinct from itself, i.e. owns
    /// a live imaginary column. False for the constant atom.
    bool has_imag_part(std::size_t atom) const;
    /// All columns except the imaginary columns of self-conjugate atoms.
    std::vector<bool> active_columns() const;
};

/// Canonical second-order pairs of a grid, drawn from the full disk
/// (grid poles plus conjugates). (p1, p2), its conjugate and the swapped
/// pair (p2, p1) all produce the same output column, so only one of them is
/// kept, in conjugate-canonical orientation. Deterministic order.
std::vector<SecondOrderAtom> canonical_pairs(const PoleGrid& grid, double scale_beta);

AtomCatalog build_catalog(const PoleGrid& grid, PairPolicy policy, double scale_alpha, double scale_beta,
                          std::uint64_t seed);

/// Appends second-order atoms (conjugate-canonicalized) unless an
/// output-equivalent pair is already present.
AtomCatalog augment_catalog(AtomCatalog catalog, std::span<const SecondOrderAtom> pairs);

/// Column-group bookkeeping shared by the solvers. Group j < n_atoms covers
/// columns {2j} or {2j, 2j+1}; the constant group covers the last column.
struct ColumnGroup {
    std::size_t first = 0;
    std::size_t size = 1;
};
std::vector<ColumnGroup> column_groups(const AtomCatalog& catalog);

class Dictionary {
public:
    Dictionary(AtomCatalog catalog, std::size_t memory);

    const AtomCatalog& catalog() const { return catalog_; }
    std::size_t memory() const { return memory_; }
    std::size_t n_columns() const { return catalog_.n_columns(); }

    /// Stacked kernels of every column, (1 + L + L^2) x n_columns. Quadratic
    /// in L; intended for small memories and cross-checks.
    Eigen::MatrixXd kernel_matrix() const;

    /// regression_matrix(input) * kernel_matrix(), computed through the
    /// separable filter responses of each atom in O(N * min(N, L)) per pole.
    Eigen::MatrixXd output_matrix(const Eigen::VectorXd& input) const;

private:
    AtomCatalog catalog_;
    std::size_t memory_;
};

Dictionary build_dictionary(AtomCatalog catalog, std::size_t memory);

/// Real unknowns for per-atom complex coefficients (catalog order) and h0.
/// Imaginary parts of self-conjugate atoms are dropped.
Eigen::VectorXd real_coeffs(std::span<const Complex> coeffs, double h0, const AtomCatalog& catalog);

/// Inverse of real_coeffs. Atoms whose |u| and |v| are both <= threshold are
/// omitted.
AtomicModel complex_coeffs(const Eigen::VectorXd& w, const AtomCatalog& catalog, double threshold = 0.0);

/// Expresses a model in catalog coordinates. Throws if a term's atom is not in
/// the catalog (poles matched up to conjugation, and pairs up to swapping,
/// within `tol`). The result reproduces the model's output, and its H2 up to
/// transposition of swapped terms.
Eigen::VectorXd catalog_coeffs(const AtomicModel& model, const AtomCatalog& catalog, double tol = 1e-12);

/// sum_j sqrt(u_j^2 + v_j^2) + |w_const|, the grid-restricted atomic norm.
double atomic_l1_cost(const Eigen::VectorXd& w, const AtomCatalog& catalog);

}  // namespace volterra
