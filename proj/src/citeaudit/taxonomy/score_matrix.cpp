#include "citeaudit/taxonomy/score_matrix.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "citeaudit/common/error.hpp"
#include "citeaudit/common/text.hpp"

namespace citeaudit::taxonomy {

namespace {

template <typename Label>
std::vector<std::string> codes() {
    std::vector<std::string> out;
    for (auto l : all_labels<Label>()) out.push_back(format_label(l));
    return out;
}

void check_cell(int v, const std::string& where) {
    if (v < 1 || v > 5) fail(ErrorCode::ConfigInvalid, "cell " + where + " = " + std::to_string(v) + " outside 1..5");
}

std::vector<std::string> fields_of(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == '\t' || c == ',' || c == ' ' || c == '\r') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

int parse_cell(const std::string& s, const std::string& where) {
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(s, &used);
    } catch (const std::exception&) {
        fail(ErrorCode::ConfigInvalid, "non-integer cell '" + s + "' at " + where);
    }
    if (used != s.size()) fail(ErrorCode::ConfigInvalid, "non-integer cell '" + s + "' at " + where);
    check_cell(v, where);
    return v;
}

}  // namespace

ScoreMatrix::ScoreMatrix(std::vector<std::string> row_labels, std::vector<std::string> col_labels,
                         std::vector<int> cells)
    : row_labels_(std::move(row_labels)), col_labels_(std::move(col_labels)), cells_(std::move(cells)) {
    if (cells_.size() != row_labels_.size() * col_labels_.size())
        fail(ErrorCode::ConfigInvalid, "matrix shape does not match label counts");
    for (std::size_t i = 0; i < cells_.size(); ++i)
        check_cell(cells_[i], row_labels_[i / col_labels_.size()] + "x" + col_labels_[i % col_labels_.size()]);
}

int ScoreMatrix::at(std::size_t row, std::size_t col) const {
    if (row >= rows() || col >= cols()) fail(ErrorCode::InvalidArgument, "matrix index out of range");
    return cells_[row * cols() + col];
}

int ScoreMatrix::at(std::string_view row_label, std::string_view col_label) const {
    auto r = std::find(row_labels_.begin(), row_labels_.end(), row_label);
    auto c = std::find(col_labels_.begin(), col_labels_.end(), col_label);
    if (r == row_labels_.end() || c == col_labels_.end())
        fail(ErrorCode::InvalidLabel, std::string(row_label) + "x" + std::string(col_label));
    return at(static_cast<std::size_t>(r - row_labels_.begin()), static_cast<std::size_t>(c - col_labels_.begin()));
}

ScoreMatrix ScoreMatrix::perturbed(int delta) const {
    std::vector<int> shifted(cells_);
    for (int& v : shifted) v = std::clamp(v + delta, 1, 5);
    return ScoreMatrix(row_labels_, col_labels_, std::move(shifted));
}

std::string ScoreMatrix::to_grid_text() const {
    std::ostringstream out;
    for (const auto& c : col_labels_) out << '\t' << c;
    out << '\n';
    for (std::size_t r = 0; r < rows(); ++r) {
        out << row_labels_[r];
        for (std::size_t c = 0; c < cols(); ++c) out << '\t' << at(r, c);
        out << '\n';
    }
    return out.str();
}

ScoreMatrix perturb_cells(const ScoreMatrix& m, int delta) {
    if (delta != 1 && delta != -1) fail(ErrorCode::InvalidArgument, "perturbation delta must be +1 or -1");
    return m.perturbed(delta);
}

const ScoreMatrix& default_ipa_matrix() {
    // rows QI1..QI5, columns SP1..SP6
    static const ScoreMatrix m(codes<IntentLabel>(), codes<PurposeLabel>(),
                               {
                                   1, 5, 3, 4, 2, 1,  // Factoid
                                   1, 5, 4, 3, 3, 2,  // Explanation
                                   2, 3, 5, 2, 4, 2,  // Instruction
                                   3, 4, 2, 3, 3, 3,  // Comparison
                                   2, 3, 2, 3, 4, 5,  // Opinion
                               });
    return m;
}

const ScoreMatrix& default_ss_matrix() {
    // rows SD1..SD10, columns ST1..ST6
    static const ScoreMatrix m(codes<DomainLabel>(), codes<TypeLabel>(),
                               {
                                   5, 5, 3, 1, 1, 2,  // Medical
                                   5, 5, 3, 1, 1, 2,  // Legal
                                   5, 5, 3, 2, 2, 3,  // Finance
                                   5, 5, 3, 3, 2, 3,  // Education
                                   5, 5, 3, 3, 2, 2,  // Science
                                   4, 4, 3, 5, 2, 3,  // Code/Data
                                   5, 4, 3, 3, 2, 3,  // Technical
                                   4, 4, 4, 3, 3, 3,  // Social/Professional
                                   4, 3, 4, 4, 3, 3,  // Shopping/Travel
                                   4, 3, 4, 4, 4, 3,  // Everyday
                               });
    return m;
}

ScoreMatrix parse_matrix_text(std::string_view input, const ScoreMatrix& shape_like) {
    std::vector<std::vector<std::string>> lines;
    for (const auto& raw : text::split(input, '\n')) {
        auto t = text::trim(raw);
        if (t.empty() || t.front() == '#') continue;
        lines.push_back(fields_of(t));
    }
    if (lines.empty()) fail(ErrorCode::ConfigInvalid, "empty matrix file");

    const auto& rows = shape_like.row_labels();
    const auto& cols = shape_like.col_labels();
    std::map<std::pair<std::string, std::string>, int> cells;

    auto is_row = [&](const std::string& s) { return std::find(rows.begin(), rows.end(), s) != rows.end(); };
    auto is_col = [&](const std::string& s) { return std::find(cols.begin(), cols.end(), s) != cols.end(); };

    bool long_form = lines.front().size() == 3 && is_row(lines.front()[0]) && is_col(lines.front()[1]);
    if (!long_form && lines.front().size() == 3 && !is_row(lines.front()[0]) && !is_col(lines.front()[0]) &&
        lines.size() > 1 && lines[1].size() == 3 && is_row(lines[1][0])) {
        // long form with a header such as "QI SP score"
        lines.erase(lines.begin());
        long_form = true;
    }

    if (long_form) {
        for (const auto& f : lines) {
            if (f.size() != 3 || !is_row(f[0]) || !is_col(f[1]))
                fail(ErrorCode::ConfigInvalid, "malformed long-form matrix line");
            auto key = std::make_pair(f[0], f[1]);
            if (cells.count(key)) fail(ErrorCode::ConfigInvalid, "duplicate cell " + f[0] + "x" + f[1]);
            cells[key] = parse_cell(f[2], f[0] + "x" + f[1]);
        }
    } else {
        auto header = lines.front();
        if (!header.empty() && !is_col(header.front())) header.erase(header.begin());  // corner label
        if (header.size() != cols.size()) fail(ErrorCode::ConfigInvalid, "header column count mismatch");
        for (const auto& h : header)
            if (!is_col(h)) fail(ErrorCode::ConfigInvalid, "unknown column label " + h);
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto& f = lines[i];
            if (f.size() != header.size() + 1 || !is_row(f[0]))
                fail(ErrorCode::ConfigInvalid, "malformed matrix row " + std::to_string(i));
            for (std::size_t c = 0; c < header.size(); ++c) {
                auto key = std::make_pair(f[0], header[c]);
                if (cells.count(key)) fail(ErrorCode::ConfigInvalid, "duplicate cell " + f[0] + "x" + header[c]);
                cells[key] = parse_cell(f[c + 1], f[0] + "x" + header[c]);
            }
        }
    }

    std::vector<int> grid;
    grid.reserve(rows.size() * cols.size());
    for (const auto& r : rows) {
        for (const auto& c : cols) {
            auto it = cells.find({r, c});
            if (it == cells.end()) fail(ErrorCode::ConfigInvalid, "missing cell " + r + "x" + c);
            grid.push_back(it->second);
        }
    }
    return ScoreMatrix(rows, cols, std::move(grid));
}

ScoreMatrix load_matrix_file(const std::string& path, const ScoreMatrix& shape_like) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open matrix file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_matrix_text(ss.str(), shape_like);
}

MatrixSet::MatrixSet() : MatrixSet(default_ipa_matrix(), default_ss_matrix()) {}

MatrixSet::MatrixSet(ScoreMatrix ipa, ScoreMatrix ss) : ipa_(std::move(ipa)), ss_(std::move(ss)) {
    if (ipa_.rows() != 5 || ipa_.cols() != 6) fail(ErrorCode::ConfigInvalid, "IPA matrix must be 5x6");
    if (ss_.rows() != 10 || ss_.cols() != 6) fail(ErrorCode::ConfigInvalid, "SS matrix must be 10x6");
}

int ipa_score(IntentLabel qi, PurposeLabel sp) noexcept {
    const auto& m = default_ipa_matrix();
    return m.cells()[index_of(qi) * m.cols() + index_of(sp)];
}

int ss_score(DomainLabel sd, TypeLabel st) noexcept {
    const auto& m = default_ss_matrix();
    return m.cells()[index_of(sd) * m.cols() + index_of(st)];
}

}  // namespace citeaudit::taxonomy
