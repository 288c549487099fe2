#pragma once
#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "volume.hpp"

namespace hepa {

// Dice coefficient 2|A n B| / (|A| + |B|); two empty masks score 1 by convention.
inline double dice(const binary_mask& a, const binary_mask& b) {
    if (a.vox.shape != b.vox.shape) throw shape_mismatch_error("dice: mask shapes differ");
    std::uint64_t na = 0, nb = 0, ni = 0;
    for (std::size_t i = 0; i < a.vox.size(); ++i) {
        na += a.vox.data[i] != 0;
        nb += b.vox.data[i] != 0;
        ni += (a.vox.data[i] != 0) && (b.vox.data[i] != 0);
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(ni) / static_cast<double>(na + nb);
}

struct eval_report {
    std::vector<std::pair<std::string, double>> per_case_dice;
    double dice_per_case = 0.0;  // mean of per-case scores
    double dice_overall = 0.0;   // pooled-voxel dice across all cases
};

// Per-case dice plus the pooled-voxel score used by the LiTS-style leaderboard.
inline eval_report evaluate(const std::map<std::string, binary_mask>& preds,
                            const std::map<std::string, binary_mask>& gts) {
    if (preds.size() != gts.size())
        throw shape_mismatch_error("evaluate: prediction/ground-truth case sets differ");
    eval_report rep;
    std::uint64_t inter = 0, total = 0;
    for (const auto& [id, gt] : gts) {
        auto it = preds.find(id);
        if (it == preds.end())
            throw shape_mismatch_error("evaluate: missing prediction for case " + id);
        const binary_mask& pr = it->second;
        if (pr.vox.shape != gt.vox.shape)
            throw shape_mismatch_error("evaluate: shape mismatch for case " + id);
        std::uint64_t na = 0, nb = 0, ni = 0;
        for (std::size_t i = 0; i < gt.vox.size(); ++i) {
            na += pr.vox.data[i] != 0;
            nb += gt.vox.data[i] != 0;
            ni += (pr.vox.data[i] != 0) && (gt.vox.data[i] != 0);
        }
        double d = (na + nb == 0) ? 1.0
                                  : 2.0 * static_cast<double>(ni) / static_cast<double>(na + nb);
        rep.per_case_dice.emplace_back(id, d);
        inter += ni;
        total += na + nb;
    }
    double sum = 0.0;
    for (const auto& [id, d] : rep.per_case_dice) sum += d;
    rep.dice_per_case = rep.per_case_dice.empty() ? 0.0 : sum / rep.per_case_dice.size();
    rep.dice_overall = (total == 0) ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(total);
    return rep;
}

struct fold {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

// Deterministic k-fold split: seeded shuffle, disjoint covering folds whose
// sizes differ by at most one.
inline std::vector<fold> kfold_split(std::vector<std::string> case_ids, int k,
                                     std::uint64_t seed) {
    if (k < 2 || static_cast<std::size_t>(k) > case_ids.size())
        throw config_error("kfold_split: need 2 <= k <= #cases");
    rng64 rng(seed);
    rng.shuffle(case_ids);
    std::size_t n = case_ids.size();
    std::vector<fold> folds(static_cast<std::size_t>(k));
    std::size_t pos = 0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::size_t sz = n / static_cast<std::size_t>(k) + (f < n % static_cast<std::size_t>(k) ? 1 : 0);
        folds[f].test_ids.assign(case_ids.begin() + pos, case_ids.begin() + pos + sz);
        pos += sz;
    }
    for (std::size_t f = 0; f < folds.size(); ++f)
        for (std::size_t g = 0; g < folds.size(); ++g)
            if (g != f)
                folds[f].train_ids.insert(folds[f].train_ids.end(), folds[g].test_ids.begin(),
                                          folds[g].test_ids.end());
    return folds;
}

}  // namespace hepa
