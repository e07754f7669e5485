#pragma once

// Label taxonomies for the five classification tasks. Every label serializes
// as its short code ("QI1", "SD6", ...), which is also the value used in the
// released dataset columns.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace citeaudit::taxonomy {

enum class IntentLabel : std::uint8_t { QI1 = 1, QI2, QI3, QI4, QI5 };
enum class PurposeLabel : std::uint8_t { SP1 = 1, SP2, SP3, SP4, SP5, SP6 };
enum class DomainLabel : std::uint8_t { SD1 = 1, SD2, SD3, SD4, SD5, SD6, SD7, SD8, SD9, SD10 };
enum class TypeLabel : std::uint8_t { ST1 = 1, ST2, ST3, ST4, ST5, ST6 };
enum class FidelityLabel : std::uint8_t { ASF1 = 1, ASF2, ASF3, ASF4, ASF5 };

template <typename Label>
struct LabelTraits;

template <>
struct LabelTraits<IntentLabel> {
    static constexpr std::string_view prefix = "QI";
    static constexpr std::size_t count = 5;
    static constexpr std::array<std::string_view, count> names = {
        "Factoid", "Explanation", "Instruction", "Comparison", "Opinion"};
};

template <>
struct LabelTraits<PurposeLabel> {
    static constexpr std::string_view prefix = "SP";
    static constexpr std::size_t count = 6;
    static constexpr std::array<std::string_view, count> names = {
        "To Promote", "To Inform", "To Instruct", "To Report", "To Discuss", "To Opine"};
};

template <>
struct LabelTraits<DomainLabel> {
    static constexpr std::string_view prefix = "SD";
    static constexpr std::size_t count = 10;
    static constexpr std::array<std::string_view, count> names = {
        "Medical/Health", "Legal",    "Finance",             "Education",       "Science",
        "Code/Data",      "Technical", "Social/Professional", "Shopping/Travel", "Everyday"};
};

template <>
struct LabelTraits<TypeLabel> {
    static constexpr std::string_view prefix = "ST";
    static constexpr std::size_t count = 6;
    static constexpr std::array<std::string_view, count> names = {
        "Official Institution", "Paper/Research", "News/Magazine",
        "Wiki/Forum",           "Blog/Social",    "Private Company"};
};

template <>
struct LabelTraits<FidelityLabel> {
    static constexpr std::string_view prefix = "ASF";
    static constexpr std::size_t count = 5;
    static constexpr std::array<std::string_view, count> names = {
        "Fabricated", "Misattributed", "Contradicted", "Amplified", "Supported"};
};

// 1-based ordinal of a label (QI3 -> 3).
template <typename Label>
constexpr int ordinal(Label l) noexcept {
    return static_cast<int>(l);
}

// 0-based index into matrix rows/columns.
template <typename Label>
constexpr std::size_t index_of(Label l) noexcept {
    return static_cast<std::size_t>(l) - 1;
}

template <typename Label>
constexpr Label from_index(std::size_t i) noexcept {
    return static_cast<Label>(i + 1);
}

template <typename Label>
std::string format_label(Label l) {
    return std::string(LabelTraits<Label>::prefix) + std::to_string(ordinal(l));
}

template <typename Label>
std::string_view label_name(Label l) noexcept {
    return LabelTraits<Label>::names[index_of(l)];
}

// Accepts exactly the short code ("SD10"); anything else yields nullopt.
template <typename Label>
std::optional<Label> parse_label(std::string_view code) noexcept {
    constexpr auto prefix = LabelTraits<Label>::prefix;
    if (code.size() <= prefix.size() || code.substr(0, prefix.size()) != prefix) return std::nullopt;
    auto digits = code.substr(prefix.size());
    if (digits.size() > 2 || digits.front() == '0') return std::nullopt;
    int value = 0;
    for (char c : digits) {
        if (c < '0' || c > '9') return std::nullopt;
        value = value * 10 + (c - '0');
    }
    if (value < 1 || value > static_cast<int>(LabelTraits<Label>::count)) return std::nullopt;
    return static_cast<Label>(value);
}

template <typename Label>
constexpr auto all_labels() noexcept {
    std::array<Label, LabelTraits<Label>::count> out{};
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = from_index<Label>(i);
    return out;
}

// SD1-SD3 (Medical, Legal, Finance) are the "Your Money or Your Life" domains.
constexpr bool is_ymyl(DomainLabel sd) noexcept {
    return sd == DomainLabel::SD1 || sd == DomainLabel::SD2 || sd == DomainLabel::SD3;
}

// Fidelity score is the label ordinal.
constexpr int asf_score(FidelityLabel asf) noexcept { return ordinal(asf); }

}  // namespace citeaudit::taxonomy
