// Copyright 2026 The simulmt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "common.hpp"

namespace simulmt {

namespace {

const char* const kMagic = "simulmt-checkpoint v1";

void write_f32_le(std::ostream& out, const std::vector<double>& values) {
  for (double d : values) {
    float f = static_cast<float>(d);
    uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    char b[4] = {static_cast<char>(bits & 0xff),
                 static_cast<char>((bits >> 8) & 0xff),
                 static_cast<char>((bits >> 16) & 0xff),
                 static_cast<char>((bits >> 24) & 0xff)};
    out.write(b, 4);
  }
}

std::vector<double> read_f32_le(std::istream& in, int64_t count,
                                const std::string& path) {
  std::vector<double> out(count);
  for (int64_t i = 0; i < count; ++i) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
      fail(Error::Code::parse,
           "checkpoint: " + path + " payload truncated at value " +
               std::to_string(i));
    }
    uint32_t bits = static_cast<uint32_t>(b[0]) |
                    (static_cast<uint32_t>(b[1]) << 8) |
                    (static_cast<uint32_t>(b[2]) << 16) |
                    (static_cast<uint32_t>(b[3]) << 24);
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    out[i] = static_cast<double>(f);
  }
  return out;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Error::Code::io, "checkpoint: cannot write " + path);
  char buf[64];
  out << kMagic << '\n';
  out << "epoch " << ckpt.epoch << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", ckpt.val_loss);
  out << "val_loss " << buf << '\n';
  out << "mode " << to_string(ckpt.mode) << '\n';
  out << "k " << ckpt.k << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", ckpt.alpha);
  out << "alpha " << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", ckpt.params.dropout_p);
  out << "dropout " << buf << '\n';
  const ModelDims& d = ckpt.params.dims;
  out << "src_vocab " << d.src_vocab << '\n';
  out << "tgt_vocab " << d.tgt_vocab << '\n';
  out << "embed " << d.embed << '\n';
  out << "hidden " << d.hidden << '\n';
  out << "layers " << d.layers << '\n';
  auto named = ckpt.params.named();
  for (const auto& [name, t] : named) {
    out << "param " << name;
    for (int64_t e : t.shape()) out << ' ' << e;
    out << '\n';
  }
  out << "data\n";
  for (const auto& [name, t] : named) write_f32_le(out, t.values());
  if (!out) fail(Error::Code::io, "checkpoint: write to " + path + " failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Error::Code::io, "checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    fail(Error::Code::parse, "checkpoint: " + path + " has no magic header");
  }

  Checkpoint ckpt;
  ModelDims dims;
  std::vector<std::pair<std::string, Shape>> manifest;
  bool saw_data = false;
  while (std::getline(in, line)) {
    if (line == "data") {
      saw_data = true;
      break;
    }
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "epoch") is >> ckpt.epoch;
    else if (key == "val_loss") is >> ckpt.val_loss;
    else if (key == "mode") {
      std::string m;
      is >> m;
      ckpt.mode = mode_from_string(m);
    } else if (key == "k") is >> ckpt.k;
    else if (key == "alpha") is >> ckpt.alpha;
    else if (key == "dropout") is >> ckpt.params.dropout_p;
    else if (key == "src_vocab") is >> dims.src_vocab;
    else if (key == "tgt_vocab") is >> dims.tgt_vocab;
    else if (key == "embed") is >> dims.embed;
    else if (key == "hidden") is >> dims.hidden;
    else if (key == "layers") is >> dims.layers;
    else if (key == "param") {
      std::string name;
      is >> name;
      Shape shape;
      int64_t e;
      while (is >> e) shape.push_back(e);
      manifest.emplace_back(name, shape);
    } else {
      fail(Error::Code::parse,
           "checkpoint: " + path + " has unknown manifest key " + key);
    }
    if (is.fail() && !is.eof()) {
      fail(Error::Code::parse,
           "checkpoint: " + path + " has a malformed " + key + " line");
    }
  }
  if (!saw_data) {
    fail(Error::Code::parse, "checkpoint: " + path + " has no data section");
  }

  double keep_dropout = ckpt.params.dropout_p;
  ckpt.params = ModelParams::init(dims, 0);
  ckpt.params.dropout_p = keep_dropout;
  auto named = ckpt.params.named();
  if (named.size() != manifest.size()) {
    fail(Error::Code::parse,
         "checkpoint: " + path + " lists " + std::to_string(manifest.size()) +
             " parameters, model has " + std::to_string(named.size()));
  }
  for (size_t i = 0; i < named.size(); ++i) {
    auto& [name, tensor] = named[i];
    const auto& [mname, mshape] = manifest[i];
    if (name != mname || tensor.shape() != mshape) {
      fail(Error::Code::parse,
           "checkpoint: " + path + " manifest entry " + mname + " " +
               shape_str(mshape) + " does not match expected " + name + " " +
               shape_str(tensor.shape()));
    }
    Tensor t = tensor;
    t.mutable_values() = read_f32_le(in, t.size(), path);
  }
  return ckpt;
}

}  // namespace simulmt
