#ifndef AVMIG_NN_CHECKPOINT_HPP_
#define AVMIG_NN_CHECKPOINT_HPP_

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "avmig/nn/tape.hpp"

// Parameter checkpoints are JSON documents:
//
//   {"format": "avmig-checkpoint", "version": 1, "kind": "<model kind>",
//    "meta": {...},
//    "tensors": [{"name": "...", "shape": [rows, cols],
//                 "values": [row-major doubles]}, ...]}
//
// Doubles are written in shortest round-trip form, so save/load is bit-exact.
namespace avmig::nn {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, Matrix>> tensors;
};

void write_checkpoint(std::ostream& out, const std::string& kind,
                      const nlohmann::json& meta,
                      std::span<Parameter* const> params);

// Throws ParseError on malformed documents or an unsupported version.
Checkpoint read_checkpoint(std::istream& in);

// Copies tensors into `params` by name. Throws ValidationError for a
// missing tensor or a shape mismatch.
void restore(const Checkpoint& ckpt, std::span<Parameter* const> params);

}  // namespace avmig::nn

#endif  // AVMIG_NN_CHECKPOINT_HPP_
