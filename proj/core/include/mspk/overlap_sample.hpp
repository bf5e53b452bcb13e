#pragma once

#include <string>
#include <vector>

namespace mspk {

/// One replica overlap array: combined R_{ll'} and per-species R^s_{ll'}
/// for n replicas, with an optional importance weight.
struct OverlapDraw {
  std::vector<std::vector<double>> combined;                 // n x n
  std::vector<std::vector<std::vector<double>>> per_species; // |S| x n x n
  double weight = 1.0;
};

/// Weighted collection of overlap arrays from any replica source
/// (cascade leaves, Gibbs samples, file input).
struct OverlapSample {
  std::vector<std::string> species;
  int n_replicas = 0;
  std::vector<OverlapDraw> draws;
};

}  // namespace mspk
