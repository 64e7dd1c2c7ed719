#ifndef MCNN_MASK_HPP
#define MCNN_MASK_HPP

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mcnn/error.hpp"

namespace mcnn {

enum class MaskKind : std::uint8_t { A, B };

inline char mask_kind_letter(MaskKind k) { return k == MaskKind::A ? 'A' : 'B'; }

/// Binary F x F filter mask enforcing raster causality.
///
/// Kind A hides the cell being predicted (first layer); kind B admits it
/// (deeper layers). Variants restrict which part of the causal region is
/// connected: 1 = full region, 2 = column band |j-c| <= 1, 3 = row band
/// |i-c| <= 1. Variant 0 marks a pattern loaded from a file.
struct MaskSpec {
    int size = 0;  // F, odd
    MaskKind kind = MaskKind::A;
    int variant = 1;
    std::vector<std::uint8_t> cells;  // F*F, row-major

    std::uint8_t at(int r, int c) const { return cells[static_cast<std::size_t>(r) * size + c]; }
    std::uint8_t& at(int r, int c) { return cells[static_cast<std::size_t>(r) * size + c]; }
    int center() const { return (size - 1) / 2; }
};

/// All-pass 1x1 mask for the output head.
inline MaskSpec unit_mask() {
    MaskSpec m;
    m.size = 1;
    m.kind = MaskKind::B;
    m.variant = 1;
    m.cells = {1};
    return m;
}

inline MaskSpec build_mask(MaskKind kind, int variant, int size) {
    if (size < 3 || size % 2 == 0) {
        throw ConfigError("mask size must be odd and >= 3, got " + std::to_string(size));
    }
    if (variant < 1 || variant > 3) {
        throw ConfigError("mask variant must be 1, 2 or 3, got " + std::to_string(variant));
    }
    MaskSpec m;
    m.size = size;
    m.kind = kind;
    m.variant = variant;
    m.cells.assign(static_cast<std::size_t>(size) * size, 0);
    const int c = m.center();
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            bool causal = i < c || (i == c && j < c);
            if (variant == 2) causal = causal && std::abs(j - c) <= 1;
            if (variant == 3) causal = causal && std::abs(i - c) <= 1;
            if (causal) m.at(i, j) = 1;
        }
    }
    if (kind == MaskKind::B) m.at(c, c) = 1;
    return m;
}

struct MaskViolation {
    int row = 0;
    int col = 0;
};

struct MaskValidation {
    bool ok = true;
    std::vector<MaskViolation> violations;
};

/// Accepts iff every 1-cell lies in the raster-causal region; the center cell
/// is additionally allowed for kind B.
inline MaskValidation validate_mask(const MaskSpec& mask) {
    MaskValidation result;
    const int c = mask.center();
    for (int i = 0; i < mask.size; ++i) {
        for (int j = 0; j < mask.size; ++j) {
            if (!mask.at(i, j)) continue;
            bool causal = i < c || (i == c && j < c);
            bool center_ok = mask.kind == MaskKind::B && i == c && j == c;
            if (!causal && !center_ok) {
                result.ok = false;
                result.violations.push_back({i, j});
            }
        }
    }
    return result;
}

// Mask file: first line "MASK <kind> <F>", then F lines of F 0/1 digits.

inline MaskSpec parse_mask(std::istream& in) {
    std::string tag, kind_str;
    int size = 0;
    if (!(in >> tag >> kind_str >> size) || tag != "MASK") {
        throw IoError("mask file: expected header 'MASK <kind> <F>'");
    }
    if (kind_str != "A" && kind_str != "B") {
        throw IoError("mask file: kind must be A or B, got '" + kind_str + "'");
    }
    if (size < 1 || size % 2 == 0) {
        throw IoError("mask file: F must be odd and positive, got " + std::to_string(size));
    }
    MaskSpec m;
    m.size = size;
    m.kind = kind_str == "A" ? MaskKind::A : MaskKind::B;
    m.variant = 0;  // pattern supplied externally
    m.cells.assign(static_cast<std::size_t>(size) * size, 0);
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            int bit = -1;
            if (!(in >> bit) || (bit != 0 && bit != 1)) {
                throw IoError("mask file: expected 0/1 at row " + std::to_string(i) + " col " +
                              std::to_string(j));
            }
            m.at(i, j) = static_cast<std::uint8_t>(bit);
        }
    }
    auto check = validate_mask(m);
    if (!check.ok) {
        std::ostringstream os;
        os << "mask file: causality violation at";
        for (const auto& v : check.violations) os << " (" << v.row << "," << v.col << ")";
        throw IoError(os.str());
    }
    return m;
}

inline MaskSpec load_mask(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mask file: " + path);
    return parse_mask(in);
}

inline void write_mask(std::ostream& out, const MaskSpec& mask) {
    out << "MASK " << mask_kind_letter(mask.kind) << ' ' << mask.size << '\n';
    for (int i = 0; i < mask.size; ++i) {
        for (int j = 0; j < mask.size; ++j) {
            out << int(mask.at(i, j)) << (j + 1 == mask.size ? '\n' : ' ');
        }
    }
}

inline void save_mask(const std::string& path, const MaskSpec& mask) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open mask file for writing: " + path);
    write_mask(out, mask);
}

}  // namespace mcnn

#endif  // MCNN_MASK_HPP
