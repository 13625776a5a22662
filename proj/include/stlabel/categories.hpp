#ifndef STLABEL_CATEGORIES_HPP
#define STLABEL_CATEGORIES_HPP

#include <array>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace stlabel {

/**
 * Coarse cell-type taxonomy used throughout the pipeline.
 *
 * Marker-database entries map into {Epithelial, Inflammatory, Connective,
 * Unknown}; Neoplastic is only reachable by refining an Epithelial cluster
 * against a cancer gene set. Unknown marks supervision absence, not a class:
 * the type-map writer emits an ignore mask instead of an Unknown channel.
 */
enum class Category : uint8_t {
    Epithelial = 0,
    Inflammatory = 1,
    Connective = 2,
    Unknown = 3,
    Neoplastic = 4,
};

/// Categories that can receive marker votes, in score-vector order.
inline constexpr std::array<Category, 3> votable_categories = {
    Category::Epithelial, Category::Inflammatory, Category::Connective,
};

inline const std::string& category_name(Category c) {
    static const std::array<std::string, 5> names = {
        "Epithelial", "Inflammatory", "Connective", "Unknown", "Neoplastic",
    };
    return names[static_cast<size_t>(c)];
}

inline Category category_from_name(std::string_view name) {
    for (size_t i = 0; i < 5; ++i) {
        auto c = static_cast<Category>(i);
        if (category_name(c) == name) {
            return c;
        }
    }
    throw ValidationError("unknown category name: " + std::string(name));
}

/**
 * Channel layout of the type target map and of classification scoring.
 * Channel 0 is background; Unknown has no channel.
 */
inline constexpr std::array<Category, 4> type_channel_categories = {
    Category::Neoplastic, Category::Epithelial, Category::Inflammatory, Category::Connective,
};

inline constexpr int num_type_channels = 5;  // background + 4 classes

/// 1-based channel index for a labeled nucleus; throws for Unknown.
inline int type_channel_of(Category c) {
    for (size_t i = 0; i < type_channel_categories.size(); ++i) {
        if (type_channel_categories[i] == c) {
            return static_cast<int>(i) + 1;
        }
    }
    throw ValidationError("category has no type channel: " + category_name(c));
}

}

#endif
