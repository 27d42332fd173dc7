#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "refed/errors.hpp"
#include "refed/rng.hpp"

namespace refed {

struct Sample {
    std::vector<double> features;
    int label = 0;
    int origin_task = 0;
    std::uint64_t uid = 0;
};

// Feature-space map applied after drawing from the class Gaussian. rotation
// acts as a Givens rotation on consecutive coordinate pairs.
struct DomainTransform {
    enum class Kind { identity, rotation, mean_shift, noise };
    Kind kind = Kind::identity;
    double angle = 0.0;
    std::vector<double> shift;
    double sigma = 0.0;

    static DomainTransform identity() { return {}; }
    static DomainTransform rotation(double angle);
    static DomainTransform mean_shift(std::vector<double> shift);
    static DomainTransform noise(double sigma);

    void apply(std::vector<double>& x, Rng& rng) const;
};

struct Task {
    int task_index = 0;
    std::vector<std::vector<Sample>> client_shards;
    std::vector<Sample> test_set;
    std::string domain_tag;
};

enum class StreamKind { class_incremental, domain_incremental };

struct TaskStream {
    StreamKind kind = StreamKind::class_incremental;
    std::vector<Task> tasks;
    int global_classes = 0;

    // Re-checks the construction invariants: disjoint (class-incremental) or
    // identical (domain-incremental) per-task label sets, uid uniqueness,
    // origin_task consistency.
    void validate() const;
};

// Deterministic class center: unit Gaussian direction scaled to the radius.
std::vector<double> class_mean(std::uint64_t seed, int global_class, int dim, double radius);

// per_class isotropic Gaussian draws around each class mean, then transform.
// Labels are class_offset .. class_offset + num_classes - 1; uids 0-based in
// generation order (stream builders reassign them).
std::vector<Sample> gen_gaussian_task(int num_classes, int dim, int per_class, int class_offset,
                                      const DomainTransform& transform, std::uint64_t seed,
                                      double radius = 3.0);

// Task t carries only labels [t*classes_per_task, (t+1)*classes_per_task).
TaskStream make_class_stream(int n_tasks, int classes_per_task, int dim, int per_class, int K,
                             double alpha, std::uint64_t seed, int test_per_class = 0);

// Every task carries all labels; task t rotates the same base draw by
// t * rotation_step radians.
TaskStream make_domain_stream(int n_tasks, int global_classes, int dim, int per_class, int K,
                              double alpha, double rotation_step, std::uint64_t seed,
                              int test_per_class = 0);

// Per-class Dirichlet(alpha) proportions, largest-remainder rounding. Output
// shards are a disjoint cover of the input.
std::vector<std::vector<Sample>> dirichlet_partition(const std::vector<Sample>& samples, int K,
                                                     double alpha, std::uint64_t seed);

// IDX image/label pair (big-endian magic 0x00000803 / 0x00000801); pixels
// scaled to [0,1].
std::vector<Sample> load_idx(const std::string& images_path, const std::string& labels_path);

// Mean over clients of the entropy of each client's label histogram; empty
// shards contribute zero.
double mean_client_label_entropy(const std::vector<std::vector<Sample>>& shards, int num_classes);

}  // namespace refed
