#ifndef STLABEL_METRICS_HPP
#define STLABEL_METRICS_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "categories.hpp"
#include "errors.hpp"

/**
 * @file metrics.hpp
 *
 * Segmentation and classification metrics: Dice/Jaccard on binary masks,
 * one-to-one instance matching at IoU > 0.5 with detection F1 and binary
 * panoptic quality, and matched-instance classification scores with the
 * Unknown-exclusion convention.
 *
 * Ratio conventions: every 0/0 ratio (both sides empty) is defined as 1.
 */

namespace stlabel {

struct MatchedPair {
    int64_t gt_id = 0;
    int64_t pred_id = 0;
    double iou = 0.0;
};

struct InstanceMatch {
    std::vector<MatchedPair> pairs;       // sorted by gt_id
    std::vector<int64_t> unmatched_gt;    // FN, ascending
    std::vector<int64_t> unmatched_pred;  // FP, ascending
};

struct DetectionScores {
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t fn = 0;
    double sum_iou = 0.0;
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;
};

inline std::pair<double, double> dice_jaccard(const std::vector<uint8_t>& gt,
                                              const std::vector<uint8_t>& pred) {
    if (gt.size() != pred.size()) {
        throw ValidationError("dice_jaccard: mask shapes differ");
    }
    int64_t inter = 0, a = 0, b = 0;
    for (size_t i = 0; i < gt.size(); ++i) {
        const bool g = gt[i] != 0, p = pred[i] != 0;
        a += g;
        b += p;
        inter += g && p;
    }
    const int64_t uni = a + b - inter;
    const double dice = (a + b) == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
    const double jac = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    return {dice, jac};
}

/**
 * One-to-one instance matching under strict IoU > 0.5. The threshold
 * guarantees each instance belongs to at most one pair, so matching is a
 * filter over overlapping (gt, pred) pairs, no assignment problem.
 */
inline std::pair<InstanceMatch, DetectionScores> match_and_detect(
    const std::vector<uint16_t>& gt, const std::vector<uint16_t>& pred) {
    if (gt.size() != pred.size()) {
        throw ValidationError("match_and_detect: instance map shapes differ");
    }
    std::map<int64_t, int64_t> gt_area, pred_area;
    std::map<std::pair<int64_t, int64_t>, int64_t> inter;
    for (size_t i = 0; i < gt.size(); ++i) {
        if (gt[i]) {
            ++gt_area[gt[i]];
        }
        if (pred[i]) {
            ++pred_area[pred[i]];
        }
        if (gt[i] && pred[i]) {
            ++inter[{gt[i], pred[i]}];
        }
    }

    InstanceMatch match;
    DetectionScores det;
    std::map<int64_t, bool> gt_matched, pred_matched;
    for (const auto& [ids, overlap] : inter) {
        const int64_t uni = gt_area[ids.first] + pred_area[ids.second] - overlap;
        const double iou = static_cast<double>(overlap) / static_cast<double>(uni);
        if (iou > 0.5) {
            match.pairs.push_back({ids.first, ids.second, iou});
            gt_matched[ids.first] = true;
            pred_matched[ids.second] = true;
            det.sum_iou += iou;
        }
    }
    for (const auto& [id, _] : gt_area) {
        if (!gt_matched.count(id)) {
            match.unmatched_gt.push_back(id);
        }
    }
    for (const auto& [id, _] : pred_area) {
        if (!pred_matched.count(id)) {
            match.unmatched_pred.push_back(id);
        }
    }

    det.tp = static_cast<int64_t>(match.pairs.size());
    det.fp = static_cast<int64_t>(match.unmatched_pred.size());
    det.fn = static_cast<int64_t>(match.unmatched_gt.size());
    det.precision = (det.tp + det.fp) == 0
                        ? 1.0
                        : static_cast<double>(det.tp) / static_cast<double>(det.tp + det.fp);
    det.recall = (det.tp + det.fn) == 0
                     ? 1.0
                     : static_cast<double>(det.tp) / static_cast<double>(det.tp + det.fn);
    det.f1 = (2 * det.tp + det.fp + det.fn) == 0
                 ? 1.0
                 : 2.0 * static_cast<double>(det.tp)
                       / static_cast<double>(2 * det.tp + det.fp + det.fn);
    return {std::move(match), det};
}

/// Binary panoptic quality: sum of matched IoU over TP + FP/2 + FN/2.
/// No instances on either side is a perfect (empty) prediction, 1.
inline double bpq(const std::vector<uint16_t>& gt, const std::vector<uint16_t>& pred) {
    auto [match, det] = match_and_detect(gt, pred);
    const double denom = static_cast<double>(det.tp) + 0.5 * static_cast<double>(det.fp + det.fn);
    if (denom == 0.0) {
        return 1.0;
    }
    return det.sum_iou / denom;
}

struct PerClassScore {
    Category category = Category::Unknown;
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t fn = 0;
    double f1 = 1.0;
};

struct ClassificationScores {
    double macro_f1 = 1.0;
    double accuracy = 1.0;
    std::vector<PerClassScore> per_class;
    int64_t unknown_gt = 0;  // excluded gt instances, reported but unscored
};

namespace metrics_detail {

inline double f1_from_counts(int64_t tp, int64_t fp, int64_t fn) {
    const int64_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

inline size_t class_slot(Category c, const std::vector<Category>& classes, const char* side) {
    for (size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] == c) {
            return i;
        }
    }
    throw ValidationError(std::string(side) + " label " + category_name(c)
                          + " is not in the configured class list");
}

}  // namespace metrics_detail

/**
 * Classification over matched instances. Unknown-labeled gt instances are
 * excluded from every count (their matched pair drops out entirely) and
 * surfaced as `unknown_gt`. Unmatched gt of class c is a FN for c and a
 * miss in the accuracy denominator; unmatched pred of class c is a FP.
 * Macro F1 averages only classes that occur in the (non-Unknown) gt.
 */
inline ClassificationScores classification_scores(const InstanceMatch& match,
                                                  const std::map<int64_t, Category>& gt_labels,
                                                  const std::map<int64_t, Category>& pred_labels,
                                                  const std::vector<Category>& classes) {
    auto gt_label = [&](int64_t id) {
        auto it = gt_labels.find(id);
        if (it == gt_labels.end()) {
            throw ValidationError("classification_scores: gt instance " + std::to_string(id)
                                  + " has no label");
        }
        return it->second;
    };
    auto pred_label = [&](int64_t id) {
        auto it = pred_labels.find(id);
        if (it == pred_labels.end()) {
            throw ValidationError("classification_scores: pred instance " + std::to_string(id)
                                  + " has no label");
        }
        return it->second;
    };

    ClassificationScores out;
    std::vector<int64_t> tp(classes.size(), 0), fp(classes.size(), 0), fn(classes.size(), 0);
    int64_t correct = 0, denom = 0;

    for (const auto& pair : match.pairs) {
        const Category g = gt_label(pair.gt_id);
        if (g == Category::Unknown) {
            ++out.unknown_gt;
            continue;
        }
        const Category p = pred_label(pair.pred_id);
        const size_t gs = metrics_detail::class_slot(g, classes, "gt");
        const size_t ps = metrics_detail::class_slot(p, classes, "pred");
        ++denom;
        if (gs == ps) {
            ++tp[gs];
            ++correct;
        } else {
            ++fn[gs];
            ++fp[ps];
        }
    }
    for (int64_t id : match.unmatched_gt) {
        const Category g = gt_label(id);
        if (g == Category::Unknown) {
            ++out.unknown_gt;
            continue;
        }
        ++fn[metrics_detail::class_slot(g, classes, "gt")];
        ++denom;
    }
    for (int64_t id : match.unmatched_pred) {
        ++fp[metrics_detail::class_slot(pred_label(id), classes, "pred")];
    }

    double f1_sum = 0.0;
    int64_t present = 0;
    for (size_t i = 0; i < classes.size(); ++i) {
        PerClassScore pc;
        pc.category = classes[i];
        pc.tp = tp[i];
        pc.fp = fp[i];
        pc.fn = fn[i];
        pc.f1 = metrics_detail::f1_from_counts(tp[i], fp[i], fn[i]);
        out.per_class.push_back(pc);
        if (tp[i] + fn[i] > 0) {
            f1_sum += pc.f1;
            ++present;
        }
    }
    out.macro_f1 = present == 0 ? 1.0 : f1_sum / static_cast<double>(present);
    out.accuracy = denom == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(denom);
    return out;
}

/**
 * Recover per-instance labels from an instance map plus a type map:
 * majority vote over the instance's pixels, where type values 1..4 vote
 * for the corresponding class and 0/255 vote Unknown. Ties go to the
 * smaller type value, with Unknown ranked last.
 */
inline std::map<int64_t, Category> instance_labels_from_type_map(
    const std::vector<uint16_t>& inst, const std::vector<uint8_t>& type) {
    if (inst.size() != type.size()) {
        throw ValidationError("instance_labels_from_type_map: map shapes differ");
    }
    std::map<int64_t, std::map<int, int64_t>> votes;  // instance -> type value -> count
    for (size_t i = 0; i < inst.size(); ++i) {
        if (!inst[i]) {
            continue;
        }
        int v = type[i];
        if (v == 0 || v == 255) {
            v = 256;  // Unknown sorts after every class value
        }
        ++votes[inst[i]][v];
    }
    std::map<int64_t, Category> labels;
    for (const auto& [id, counts] : votes) {
        int best_value = 256;
        int64_t best_count = -1;
        for (const auto& [value, count] : counts) {
            if (count > best_count) {  // map order breaks ties toward smaller value
                best_count = count;
                best_value = value;
            }
        }
        if (best_value == 256) {
            labels[id] = Category::Unknown;
        } else if (best_value >= 1 && best_value <= num_type_channels - 1) {
            labels[id] = type_channel_categories[static_cast<size_t>(best_value - 1)];
        } else {
            throw ValidationError("instance_labels_from_type_map: type value "
                                  + std::to_string(best_value) + " is not a known class index");
        }
    }
    return labels;
}

struct MetricReport {
    double dice = 1.0;
    double jaccard = 1.0;
    double bpq = 1.0;
    double f1 = 1.0;
    double precision = 1.0;
    double recall = 1.0;
    double macro_f1 = 1.0;
    double accuracy = 1.0;
    std::vector<PerClassScore> per_class;
    int64_t unknown_gt = 0;
    int64_t n_patches = 0;
};

/**
 * Dataset-level aggregation: pixel and instance counts accumulate across
 * patches (in fixed patch order) and every ratio is evaluated once at the
 * end, so no per-patch averaging artifacts enter the report.
 */
class MetricAccumulator {
public:
    explicit MetricAccumulator(std::vector<Category> classes) : classes_(std::move(classes)) {
        tp_.assign(classes_.size(), 0);
        fp_.assign(classes_.size(), 0);
        fn_.assign(classes_.size(), 0);
    }

    void add_patch(const std::vector<uint16_t>& gt_inst, const std::vector<uint8_t>& gt_type,
                   const std::vector<uint16_t>& pred_inst, const std::vector<uint8_t>& pred_type) {
        if (gt_inst.size() != pred_inst.size()) {
            throw ValidationError("metrics: gt and pred patches have different shapes");
        }
        for (size_t i = 0; i < gt_inst.size(); ++i) {
            const bool g = gt_inst[i] != 0, p = pred_inst[i] != 0;
            gt_px_ += g;
            pred_px_ += p;
            inter_px_ += g && p;
        }

        auto [match, det] = match_and_detect(gt_inst, pred_inst);
        tp_det_ += det.tp;
        fp_det_ += det.fp;
        fn_det_ += det.fn;
        sum_iou_ += det.sum_iou;

        auto gt_labels = instance_labels_from_type_map(gt_inst, gt_type);
        auto pred_labels = instance_labels_from_type_map(pred_inst, pred_type);
        auto cls = classification_scores(match, gt_labels, pred_labels, classes_);
        for (size_t i = 0; i < classes_.size(); ++i) {
            tp_[i] += cls.per_class[i].tp;
            fp_[i] += cls.per_class[i].fp;
            fn_[i] += cls.per_class[i].fn;
        }
        unknown_gt_ += cls.unknown_gt;
        for (const auto& pair : match.pairs) {
            const Category g = gt_labels.at(pair.gt_id);
            if (g == Category::Unknown) {
                continue;
            }
            ++acc_denom_;
            if (g == pred_labels.at(pair.pred_id)) {
                ++correct_;
            }
        }
        for (int64_t id : match.unmatched_gt) {
            if (gt_labels.at(id) != Category::Unknown) {
                ++acc_denom_;
            }
        }
        ++n_patches_;
    }

    MetricReport finalize() const {
        MetricReport r;
        r.n_patches = n_patches_;
        const int64_t mask_sum = gt_px_ + pred_px_;
        const int64_t mask_union = mask_sum - inter_px_;
        r.dice = mask_sum == 0 ? 1.0
                               : 2.0 * static_cast<double>(inter_px_) / static_cast<double>(mask_sum);
        r.jaccard = mask_union == 0
                        ? 1.0
                        : static_cast<double>(inter_px_) / static_cast<double>(mask_union);
        r.precision = (tp_det_ + fp_det_) == 0
                          ? 1.0
                          : static_cast<double>(tp_det_) / static_cast<double>(tp_det_ + fp_det_);
        r.recall = (tp_det_ + fn_det_) == 0
                       ? 1.0
                       : static_cast<double>(tp_det_) / static_cast<double>(tp_det_ + fn_det_);
        r.f1 = (2 * tp_det_ + fp_det_ + fn_det_) == 0
                   ? 1.0
                   : 2.0 * static_cast<double>(tp_det_)
                         / static_cast<double>(2 * tp_det_ + fp_det_ + fn_det_);
        const double pq_denom =
            static_cast<double>(tp_det_) + 0.5 * static_cast<double>(fp_det_ + fn_det_);
        r.bpq = pq_denom == 0.0 ? 1.0 : sum_iou_ / pq_denom;

        double f1_sum = 0.0;
        int64_t present = 0;
        for (size_t i = 0; i < classes_.size(); ++i) {
            PerClassScore pc;
            pc.category = classes_[i];
            pc.tp = tp_[i];
            pc.fp = fp_[i];
            pc.fn = fn_[i];
            pc.f1 = metrics_detail::f1_from_counts(tp_[i], fp_[i], fn_[i]);
            r.per_class.push_back(pc);
            if (tp_[i] + fn_[i] > 0) {
                f1_sum += pc.f1;
                ++present;
            }
        }
        r.macro_f1 = present == 0 ? 1.0 : f1_sum / static_cast<double>(present);
        r.accuracy = acc_denom_ == 0
                         ? 1.0
                         : static_cast<double>(correct_) / static_cast<double>(acc_denom_);
        r.unknown_gt = unknown_gt_;
        return r;
    }

private:
    std::vector<Category> classes_;
    int64_t inter_px_ = 0, gt_px_ = 0, pred_px_ = 0;
    int64_t tp_det_ = 0, fp_det_ = 0, fn_det_ = 0;
    double sum_iou_ = 0.0;
    std::vector<int64_t> tp_, fp_, fn_;
    int64_t correct_ = 0, acc_denom_ = 0, unknown_gt_ = 0, n_patches_ = 0;
};

inline nlohmann::ordered_json metric_report_json(const MetricReport& r) {
    nlohmann::ordered_json j;
    j["dice"] = r.dice;
    j["jaccard"] = r.jaccard;
    j["bpq"] = r.bpq;
    j["f1"] = r.f1;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["macro_f1"] = r.macro_f1;
    j["accuracy"] = r.accuracy;
    nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
    for (const auto& pc : r.per_class) {
        per_class[category_name(pc.category)] = {
            {"tp", pc.tp}, {"fp", pc.fp}, {"fn", pc.fn}, {"f1", pc.f1}};
    }
    j["per_class"] = std::move(per_class);
    j["unknown_gt"] = r.unknown_gt;
    j["n_patches"] = r.n_patches;
    return j;
}

}

#endif
