#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace radsynth::eval {

/// Feature matrix with one id per row.
struct FeatureTable {
    std::vector<std::string> ids;
    Eigen::MatrixXd features;
};

/// CSV with header "id,f0,...,f{d-1}"; values written with 17 significant
/// digits so a read-back is bit-exact.
void write_features_csv(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_features_csv(const std::filesystem::path& path);

}  // namespace radsynth::eval
