#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "citeaudit/taxonomy/labels.hpp"

namespace citeaudit::taxonomy {

// Labeled 2-D grid of integer scores in [1,5].
class ScoreMatrix {
public:
    ScoreMatrix(std::vector<std::string> row_labels, std::vector<std::string> col_labels,
                std::vector<int> cells);

    std::size_t rows() const noexcept { return row_labels_.size(); }
    std::size_t cols() const noexcept { return col_labels_.size(); }
    const std::vector<std::string>& row_labels() const noexcept { return row_labels_; }
    const std::vector<std::string>& col_labels() const noexcept { return col_labels_; }
    const std::vector<int>& cells() const noexcept { return cells_; }

    int at(std::size_t row, std::size_t col) const;
    int at(std::string_view row_label, std::string_view col_label) const;

    // Each cell shifted by delta and clamped to [1,5]; *this is untouched.
    ScoreMatrix perturbed(int delta) const;

    // Header row of column labels, then one line per row label. Tab separated.
    std::string to_grid_text() const;

    friend bool operator==(const ScoreMatrix&, const ScoreMatrix&) = default;

private:
    std::vector<std::string> row_labels_;
    std::vector<std::string> col_labels_;
    std::vector<int> cells_;
};

ScoreMatrix perturb_cells(const ScoreMatrix& m, int delta);

// The two shipped matrices: Query Intent x Source Purpose (5x6) and
// Source Domain x Source Type (10x6).
const ScoreMatrix& default_ipa_matrix();
const ScoreMatrix& default_ss_matrix();

// Parses an override file. Two layouts are accepted:
//   grid: a header line of column labels, then "<row label> <int> <int> ..."
//   long: one "<row label> <col label> <int>" triple per line
// Tabs, commas or runs of spaces separate fields; '#' starts a comment line.
// Row and column label sets must match `shape_like` exactly; any cell outside
// 1..5 is rejected with ConfigInvalid.
ScoreMatrix parse_matrix_text(std::string_view text, const ScoreMatrix& shape_like);
ScoreMatrix load_matrix_file(const std::string& path, const ScoreMatrix& shape_like);

// Typed lookups against a particular matrix pair.
class MatrixSet {
public:
    MatrixSet();
    MatrixSet(ScoreMatrix ipa, ScoreMatrix ss);

    const ScoreMatrix& ipa() const noexcept { return ipa_; }
    const ScoreMatrix& ss() const noexcept { return ss_; }

    int ipa_score(IntentLabel qi, PurposeLabel sp) const noexcept {
        return ipa_.cells()[index_of(qi) * ipa_.cols() + index_of(sp)];
    }
    int ss_score(DomainLabel sd, TypeLabel st) const noexcept {
        return ss_.cells()[index_of(sd) * ss_.cols() + index_of(st)];
    }

private:
    ScoreMatrix ipa_;
    ScoreMatrix ss_;
};

// Lookups against the shipped matrices.
int ipa_score(IntentLabel qi, PurposeLabel sp) noexcept;
int ss_score(DomainLabel sd, TypeLabel st) noexcept;

}  // namespace citeaudit::taxonomy
