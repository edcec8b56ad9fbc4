#include "herd/reideval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace herd {

namespace {

std::vector<std::string> day_ids_of(const std::vector<SampleMeta>& samples) {
    std::set<std::string> days;
    for (const SampleMeta& s : samples) days.insert(s.day_id);
    return {days.begin(), days.end()};
}

std::vector<std::string> shuffled_ids(const std::vector<SampleMeta>& samples, std::uint64_t seed,
                                      const char* stream) {
    std::vector<std::string> ids;
    ids.reserve(samples.size());
    for (const SampleMeta& s : samples) ids.push_back(s.sample_id);
    std::sort(ids.begin(), ids.end());
    Rng rng(mix_seed(seed, stream_id(stream)));
    rng.shuffle(ids);
    return ids;
}

} // namespace

FoldPlan make_fold_plan(const std::vector<SampleMeta>& samples, FoldMode mode,
                        std::uint64_t seed) {
    if (samples.empty()) throw std::invalid_argument("fold plan: no samples");
    {
        std::unordered_set<std::string> ids;
        for (const SampleMeta& s : samples) {
            if (!ids.insert(s.sample_id).second) {
                throw std::invalid_argument("fold plan: duplicate sample_id \"" + s.sample_id + "\"");
            }
        }
    }
    const std::vector<std::string> days = day_ids_of(samples);

    FoldPlan plan;
    plan.mode = mode;

    switch (mode) {
    case FoldMode::kWithinDayK5: {
        if (days.size() != 1) {
            throw std::invalid_argument("fold plan: within-day mode requires exactly one day");
        }
        const std::vector<std::string> ids = shuffled_ids(samples, seed, "within-day");
        if (ids.size() < 5) throw std::invalid_argument("fold plan: need at least 5 samples");
        const std::size_t n = ids.size();
        for (std::size_t f = 0; f < 5; ++f) {
            Fold fold;
            fold.name = "fold" + std::to_string(f + 1);
            const std::size_t lo = f * n / 5;
            const std::size_t hi = (f + 1) * n / 5;
            for (std::size_t i = 0; i < n; ++i) {
                (i >= lo && i < hi ? fold.test_ids : fold.train_ids).push_back(ids[i]);
            }
            plan.folds.push_back(std::move(fold));
        }
        break;
    }
    case FoldMode::kDayWise: {
        if (days.size() < 3) {
            throw std::invalid_argument("fold plan: day-wise mode requires at least 3 days");
        }
        for (std::size_t d = 0; d < days.size(); ++d) {
            Fold fold;
            fold.name = "test-" + days[d];
            const std::string& val_day = days[(d + days.size() - 1) % days.size()];
            for (const SampleMeta& s : samples) {
                if (s.day_id == days[d]) {
                    fold.test_ids.push_back(s.sample_id);
                } else if (s.day_id == val_day) {
                    fold.val_ids.push_back(s.sample_id);
                } else {
                    fold.train_ids.push_back(s.sample_id);
                }
            }
            plan.folds.push_back(std::move(fold));
        }
        break;
    }
    case FoldMode::kSingleDay: {
        if (days.size() != 1) {
            throw std::invalid_argument("fold plan: single-day mode requires exactly one day");
        }
        const std::vector<std::string> ids = shuffled_ids(samples, seed, "single-day");
        if (ids.size() < 5) throw std::invalid_argument("fold plan: need at least 5 samples");
        Fold fold;
        fold.name = "holdout";
        const std::size_t split = ids.size() * 4 / 5;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            (i < split ? fold.train_ids : fold.test_ids).push_back(ids[i]);
        }
        plan.folds.push_back(std::move(fold));
        break;
    }
    }
    return plan;
}

Aggregate aggregate_of(const std::vector<double>& values) {
    Aggregate a;
    if (values.empty()) return a;
    for (double v : values) a.mean += v;
    a.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(var / static_cast<double>(values.size()));
    return a;
}

ProtocolReport run_protocol(const std::vector<SampleMeta>& meta,
                            const std::vector<RgbMaskSample>& samples, const FoldPlan& plan,
                            const TrainConfig& cfg) {
    if (meta.size() != samples.size()) {
        throw std::invalid_argument("run_protocol: meta/sample count mismatch");
    }
    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < meta.size(); ++i) {
        if (!by_id.emplace(meta[i].sample_id, i).second) {
            throw std::invalid_argument("run_protocol: duplicate sample_id");
        }
        if (!meta[i].identity || !samples[i].identity) {
            throw std::invalid_argument("run_protocol: samples must carry identities");
        }
    }

    ProtocolReport report;
    std::vector<double> knns, aris, amis, nmis, has;

    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        const Fold& fold = plan.folds[f];

        // Training must never see a test sample.
        std::unordered_set<std::string> test_set(fold.test_ids.begin(), fold.test_ids.end());
        for (const std::string& id : fold.train_ids) {
            if (test_set.count(id)) {
                throw std::invalid_argument("run_protocol: fold \"" + fold.name +
                                            "\" shares samples between train and test");
            }
        }
        for (const std::string& id : fold.val_ids) {
            if (test_set.count(id)) {
                throw std::invalid_argument("run_protocol: fold \"" + fold.name +
                                            "\" shares samples between val and test");
            }
        }

        const auto gather = [&](const std::vector<std::string>& ids) {
            std::pair<std::vector<SampleMeta>, std::vector<RgbMaskSample>> out;
            for (const std::string& id : ids) {
                const auto it = by_id.find(id);
                if (it == by_id.end()) {
                    throw std::invalid_argument("run_protocol: unknown sample_id \"" + id + "\"");
                }
                out.first.push_back(meta[it->second]);
                out.second.push_back(samples[it->second]);
            }
            return out;
        };

        const auto [train_meta, train_samples] = gather(fold.train_ids);
        const auto [val_meta, val_samples] = gather(fold.val_ids);
        const auto [test_meta, test_samples] = gather(fold.test_ids);

        std::set<std::string> test_identities;
        for (const SampleMeta& s : test_meta) test_identities.insert(*s.identity);
        if (test_identities.size() < 2) {
            throw std::invalid_argument("run_protocol: fold \"" + fold.name +
                                        "\" has fewer than 2 test identities");
        }
        if (train_samples.empty()) {
            throw std::invalid_argument("run_protocol: fold \"" + fold.name + "\" has no train samples");
        }

        TrainConfig fold_cfg = cfg;
        fold_cfg.seed = mix_seed(cfg.seed, stream_id(fold.name.c_str()));
        const TrainResult trained =
            train(train_samples, fold_cfg, val_samples.empty() ? nullptr : &val_samples);

        FoldReport fr;
        fr.fold = fold.name;
        fr.best_epoch = trained.best_epoch;
        fr.epoch_losses = trained.epoch_losses;
        fr.val_accuracy = trained.val_accuracy;

        std::vector<std::string> gallery_labels, query_labels;
        for (const SampleMeta& s : train_meta) gallery_labels.push_back(*s.identity);
        for (const SampleMeta& s : test_meta) query_labels.push_back(*s.identity);

        const std::vector<Point> gallery = embed_all(trained.model, train_samples);
        const std::vector<Point> queries = embed_all(trained.model, test_samples);
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.knn_k), gallery.size());
        fr.knn_accuracy = knn_classify(gallery, gallery_labels, queries, query_labels, k).accuracy;

        const KmeansResult km = kmeans(queries, test_identities.size(),
                                       mix_seed(fold_cfg.seed, stream_id("kmeans")));
        const std::vector<int> truth = encode_labels(query_labels);
        fr.ari = ari(truth, km.labels);
        fr.ami = ami(truth, km.labels);
        fr.nmi = nmi(truth, km.labels);
        fr.ha_accuracy = hungarian_accuracy(truth, km.labels);

        for (const SampleMeta& s : test_meta) fr.test_sample_ids.push_back(s.sample_id);
        fr.test_labels = query_labels;
        fr.kmeans_labels = km.labels;
        fr.test_embeddings = queries;

        knns.push_back(fr.knn_accuracy);
        aris.push_back(fr.ari);
        amis.push_back(fr.ami);
        nmis.push_back(fr.nmi);
        has.push_back(fr.ha_accuracy);
        report.folds.push_back(std::move(fr));
    }

    report.knn = aggregate_of(knns);
    report.ari = aggregate_of(aris);
    report.ami = aggregate_of(amis);
    report.nmi = aggregate_of(nmis);
    report.ha = aggregate_of(has);
    return report;
}

} // namespace herd
