#include "refed/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <unordered_set>

namespace refed {

DomainTransform DomainTransform::rotation(double angle) {
    DomainTransform t;
    t.kind = Kind::rotation;
    t.angle = angle;
    return t;
}

DomainTransform DomainTransform::mean_shift(std::vector<double> shift) {
    DomainTransform t;
    t.kind = Kind::mean_shift;
    t.shift = std::move(shift);
    return t;
}

DomainTransform DomainTransform::noise(double sigma) {
    DomainTransform t;
    t.kind = Kind::noise;
    t.sigma = sigma;
    return t;
}

void DomainTransform::apply(std::vector<double>& x, Rng& rng) const {
    switch (kind) {
        case Kind::identity:
            return;
        case Kind::rotation: {
            const double c = std::cos(angle);
            const double s = std::sin(angle);
            for (std::size_t i = 0; i + 1 < x.size(); i += 2) {
                const double a = x[i];
                const double b = x[i + 1];
                x[i] = c * a - s * b;
                x[i + 1] = s * a + c * b;
            }
            return;
        }
        case Kind::mean_shift: {
            if (shift.size() != x.size()) {
                throw ConfigError("mean_shift transform: shift dimension mismatch");
            }
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += shift[i];
            return;
        }
        case Kind::noise: {
            for (double& v : x) v += sigma * rng.normal();
            return;
        }
    }
}

std::vector<double> class_mean(std::uint64_t seed, int global_class, int dim, double radius) {
    Rng rng(derive_seed(seed, "class-mean", static_cast<std::uint64_t>(global_class)));
    std::vector<double> mean(static_cast<std::size_t>(dim));
    double norm_sq = 0.0;
    for (double& v : mean) {
        v = rng.normal();
        norm_sq += v * v;
    }
    const double scale = radius / std::sqrt(std::max(norm_sq, 1e-300));
    for (double& v : mean) v *= scale;
    return mean;
}

std::vector<Sample> gen_gaussian_task(int num_classes, int dim, int per_class, int class_offset,
                                      const DomainTransform& transform, std::uint64_t seed,
                                      double radius) {
    if (num_classes < 2) throw ConfigError("gen_gaussian_task: num_classes must be >= 2");
    if (per_class < 1) throw ConfigError("gen_gaussian_task: per_class must be >= 1");
    if (dim < 1) throw ConfigError("gen_gaussian_task: dim must be >= 1");
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(num_classes) * per_class);
    std::uint64_t uid = 0;
    for (int c = 0; c < num_classes; ++c) {
        const int g = class_offset + c;
        const std::vector<double> mean = class_mean(seed, g, dim, radius);
        Rng rng(derive_seed(seed, "class-samples", static_cast<std::uint64_t>(g)));
        Rng noise_rng(derive_seed(seed, "transform-noise", static_cast<std::uint64_t>(g)));
        for (int i = 0; i < per_class; ++i) {
            Sample s;
            s.features.resize(static_cast<std::size_t>(dim));
            for (int d = 0; d < dim; ++d) {
                s.features[static_cast<std::size_t>(d)] =
                    mean[static_cast<std::size_t>(d)] + rng.normal();
            }
            transform.apply(s.features, noise_rng);
            s.label = g;
            s.origin_task = 0;
            s.uid = uid++;
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<std::vector<Sample>> dirichlet_partition(const std::vector<Sample>& samples, int K,
                                                     double alpha, std::uint64_t seed) {
    if (K < 1) throw ConfigError("dirichlet_partition: K must be >= 1");
    if (!(alpha > 0.0)) throw ConfigError("dirichlet_partition: alpha must be > 0");

    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        by_label[samples[i].label].push_back(i);
    }

    std::vector<std::vector<Sample>> shards(static_cast<std::size_t>(K));
    Rng rng(derive_seed(seed, "dirichlet"));
    for (auto& [label, indices] : by_label) {
        const std::size_t n = indices.size();
        std::vector<double> prop(static_cast<std::size_t>(K));
        double total = 0.0;
        for (double& p : prop) {
            p = rng.gamma(alpha);
            total += p;
        }
        for (double& p : prop) p /= total;

        // largest-remainder rounding: every sample assigned exactly once
        std::vector<std::size_t> counts(static_cast<std::size_t>(K));
        std::vector<std::pair<double, int>> remainders;
        std::size_t assigned = 0;
        for (int k = 0; k < K; ++k) {
            const double exact = prop[static_cast<std::size_t>(k)] * static_cast<double>(n);
            counts[static_cast<std::size_t>(k)] = static_cast<std::size_t>(std::floor(exact));
            assigned += counts[static_cast<std::size_t>(k)];
            remainders.emplace_back(exact - std::floor(exact), k);
        }
        std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t r = 0; assigned < n; ++r, ++assigned) {
            counts[static_cast<std::size_t>(remainders[r % remainders.size()].second)]++;
        }

        rng.shuffle(indices);
        std::size_t pos = 0;
        for (int k = 0; k < K; ++k) {
            for (std::size_t j = 0; j < counts[static_cast<std::size_t>(k)]; ++j) {
                shards[static_cast<std::size_t>(k)].push_back(samples[indices[pos++]]);
            }
        }
    }
    return shards;
}

namespace {

// Streams keep train/test draws on separate substreams and reassign uids so
// they are unique across the whole stream.
struct UidCounter {
    std::uint64_t next = 0;
    void relabel(std::vector<Sample>& samples, int task_index) {
        for (Sample& s : samples) {
            s.uid = next++;
            s.origin_task = task_index;
        }
    }
};

int resolve_test_per_class(int per_class, int test_per_class) {
    if (test_per_class > 0) return test_per_class;
    return std::max(per_class / 4, 1);
}

}  // namespace

TaskStream make_class_stream(int n_tasks, int classes_per_task, int dim, int per_class, int K,
                             double alpha, std::uint64_t seed, int test_per_class) {
    if (n_tasks < 1 || classes_per_task < 1) {
        throw ConfigError("make_class_stream: n_tasks and classes_per_task must be >= 1");
    }
    if (classes_per_task < 2 && n_tasks * classes_per_task < 2) {
        throw ConfigError("make_class_stream: global label space must have >= 2 classes");
    }
    const int n_test = resolve_test_per_class(per_class, test_per_class);
    TaskStream stream;
    stream.kind = StreamKind::class_incremental;
    stream.global_classes = n_tasks * classes_per_task;
    UidCounter uids;
    for (int t = 0; t < n_tasks; ++t) {
        const int offset = t * classes_per_task;
        std::vector<Sample> train;
        std::vector<Sample> test;
        if (classes_per_task >= 2) {
            train = gen_gaussian_task(classes_per_task, dim, per_class, offset,
                                      DomainTransform::identity(),
                                      derive_seed(seed, "train-task", static_cast<std::uint64_t>(t)));
            test = gen_gaussian_task(classes_per_task, dim, n_test, offset,
                                     DomainTransform::identity(),
                                     derive_seed(seed, "test-task", static_cast<std::uint64_t>(t)));
        } else {
            // single new class per task: draw two-class blocks and keep the block
            // belonging to this task so gen_gaussian_task's >= 2 contract holds
            auto keep = [offset](std::vector<Sample> v) {
                std::erase_if(v, [offset](const Sample& s) { return s.label != offset; });
                return v;
            };
            train = keep(gen_gaussian_task(2, dim, per_class, offset, DomainTransform::identity(),
                                           derive_seed(seed, "train-task",
                                                       static_cast<std::uint64_t>(t))));
            test = keep(gen_gaussian_task(2, dim, n_test, offset, DomainTransform::identity(),
                                          derive_seed(seed, "test-task",
                                                      static_cast<std::uint64_t>(t))));
        }
        uids.relabel(train, t);
        uids.relabel(test, t);
        Task task;
        task.task_index = t;
        task.client_shards = dirichlet_partition(
            train, K, alpha, derive_seed(seed, "partition", static_cast<std::uint64_t>(t)));
        task.test_set = std::move(test);
        char tag[32];
        std::snprintf(tag, sizeof(tag), "classes-%d-%d", offset, offset + classes_per_task - 1);
        task.domain_tag = tag;
        stream.tasks.push_back(std::move(task));
    }
    stream.validate();
    return stream;
}

TaskStream make_domain_stream(int n_tasks, int global_classes, int dim, int per_class, int K,
                              double alpha, double rotation_step, std::uint64_t seed,
                              int test_per_class) {
    if (n_tasks < 2) throw ConfigError("make_domain_stream: n_tasks must be >= 2");
    if (global_classes < 2) throw ConfigError("make_domain_stream: global_classes must be >= 2");
    const int n_test = resolve_test_per_class(per_class, test_per_class);
    TaskStream stream;
    stream.kind = StreamKind::domain_incremental;
    stream.global_classes = global_classes;
    UidCounter uids;
    for (int t = 0; t < n_tasks; ++t) {
        const DomainTransform transform = DomainTransform::rotation(rotation_step * t);
        // same base seed for every task: task t is the base draw rotated
        std::vector<Sample> train = gen_gaussian_task(global_classes, dim, per_class, 0,
                                                      transform, derive_seed(seed, "train-base"));
        std::vector<Sample> test = gen_gaussian_task(global_classes, dim, n_test, 0, transform,
                                                     derive_seed(seed, "test-base"));
        uids.relabel(train, t);
        uids.relabel(test, t);
        Task task;
        task.task_index = t;
        task.client_shards = dirichlet_partition(
            train, K, alpha, derive_seed(seed, "partition", static_cast<std::uint64_t>(t)));
        task.test_set = std::move(test);
        char tag[32];
        std::snprintf(tag, sizeof(tag), "rot-%.4f", rotation_step * t);
        task.domain_tag = tag;
        stream.tasks.push_back(std::move(task));
    }
    stream.validate();
    return stream;
}

void TaskStream::validate() const {
    std::unordered_set<std::uint64_t> seen_uids;
    std::set<int> all_labels;
    std::vector<std::set<int>> task_labels;
    for (const Task& task : tasks) {
        std::set<int> labels;
        auto visit = [&](const Sample& s) {
            if (!seen_uids.insert(s.uid).second) {
                throw ConfigError("TaskStream: duplicate uid " + std::to_string(s.uid));
            }
            if (s.origin_task != task.task_index) {
                throw ConfigError("TaskStream: origin_task mismatch");
            }
            if (s.label < 0 || s.label >= global_classes) {
                throw ConfigError("TaskStream: label outside the global label space");
            }
            labels.insert(s.label);
        };
        for (const auto& shard : task.client_shards) {
            for (const Sample& s : shard) visit(s);
        }
        for (const Sample& s : task.test_set) visit(s);
        task_labels.push_back(labels);
        all_labels.insert(labels.begin(), labels.end());
    }
    if (kind == StreamKind::class_incremental) {
        std::size_t total = 0;
        for (const auto& labels : task_labels) total += labels.size();
        if (total != all_labels.size() ||
            static_cast<int>(all_labels.size()) != global_classes) {
            throw ConfigError("TaskStream: class-incremental tasks must have disjoint label sets "
                              "covering the global label space");
        }
    } else {
        for (const auto& labels : task_labels) {
            if (static_cast<int>(labels.size()) != global_classes) {
                throw ConfigError("TaskStream: domain-incremental tasks must expose every label");
            }
        }
    }
}

namespace {

std::uint32_t read_be32(std::FILE* f, const std::string& path) {
    unsigned char buf[4];
    if (std::fread(buf, 1, 4, f) != 4) {
        throw ParseError("truncated IDX file: " + path);
    }
    return (static_cast<std::uint32_t>(buf[0]) << 24) | (static_cast<std::uint32_t>(buf[1]) << 16) |
           (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) std::fclose(f);
    }
};

}  // namespace

std::vector<Sample> load_idx(const std::string& images_path, const std::string& labels_path) {
    std::unique_ptr<std::FILE, FileCloser> img(std::fopen(images_path.c_str(), "rb"));
    if (!img) throw ParseError("cannot open IDX file: " + images_path);
    std::unique_ptr<std::FILE, FileCloser> lbl(std::fopen(labels_path.c_str(), "rb"));
    if (!lbl) throw ParseError("cannot open IDX file: " + labels_path);

    char buf[64];
    const std::uint32_t img_magic = read_be32(img.get(), images_path);
    if (img_magic != 0x00000803u) {
        std::snprintf(buf, sizeof(buf), "0x%08x (expected 0x00000803)", img_magic);
        throw ParseError("bad IDX image magic " + std::string(buf) + " in " + images_path);
    }
    const std::uint32_t lbl_magic = read_be32(lbl.get(), labels_path);
    if (lbl_magic != 0x00000801u) {
        std::snprintf(buf, sizeof(buf), "0x%08x (expected 0x00000801)", lbl_magic);
        throw ParseError("bad IDX label magic " + std::string(buf) + " in " + labels_path);
    }

    const std::uint32_t n_images = read_be32(img.get(), images_path);
    const std::uint32_t rows = read_be32(img.get(), images_path);
    const std::uint32_t cols = read_be32(img.get(), images_path);
    const std::uint32_t n_labels = read_be32(lbl.get(), labels_path);
    if (n_images != n_labels) {
        throw ParseError("IDX count mismatch: " + std::to_string(n_images) + " images vs " +
                         std::to_string(n_labels) + " labels");
    }

    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> pixel_row(dim);
    std::vector<Sample> out;
    out.reserve(n_images);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        if (std::fread(pixel_row.data(), 1, dim, img.get()) != dim) {
            throw ParseError("truncated IDX file: " + images_path);
        }
        unsigned char label = 0;
        if (std::fread(&label, 1, 1, lbl.get()) != 1) {
            throw ParseError("truncated IDX file: " + labels_path);
        }
        Sample s;
        s.features.resize(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            s.features[d] = static_cast<double>(pixel_row[d]) / 255.0;
        }
        s.label = label;
        s.origin_task = 0;
        s.uid = i;
        out.push_back(std::move(s));
    }
    return out;
}

double mean_client_label_entropy(const std::vector<std::vector<Sample>>& shards,
                                 int num_classes) {
    if (shards.empty()) return 0.0;
    double total = 0.0;
    for (const auto& shard : shards) {
        std::vector<double> hist(static_cast<std::size_t>(num_classes), 0.0);
        for (const Sample& s : shard) hist[static_cast<std::size_t>(s.label)] += 1.0;
        double entropy = 0.0;
        if (!shard.empty()) {
            for (double h : hist) {
                if (h > 0.0) {
                    const double p = h / static_cast<double>(shard.size());
                    entropy -= p * std::log(p);
                }
            }
        }
        total += entropy;
    }
    return total / static_cast<double>(shards.size());
}

}  // namespace refed
