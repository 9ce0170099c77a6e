#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "c3ae/model.hpp"
#include "c3ae/nn/losses.hpp"

using namespace c3ae;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "c3ae_model_test";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Tensor32 random_batch(int n, int size, std::uint64_t seed) {
  Rng rng(seed);
  return Tensor32::uniform({n, 3, size, size}, rng, 0.0, 1.0);
}

}  // namespace

TEST(CaeConfig, Validation) {
  CaeConfig bad = CaeConfig::finetuned_variant();
  bad.input_size = 48;  // not 16 * 2^k
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = CaeConfig::finetuned_variant();
  bad.code_channels = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_TRUE(CaeConfig::finetuned_variant().canonical());
  EXPECT_TRUE(CaeConfig::composite_variant().canonical());
  CaeConfig odd = CaeConfig::finetuned_variant();
  odd.code_channels = 7;
  EXPECT_FALSE(odd.canonical());
}

TEST(CaeBuild, DeterministicPerSeed) {
  Cae<float> a(CaeConfig::finetuned_variant(), 42);
  Cae<float> b(CaeConfig::finetuned_variant(), 42);
  Cae<float> c(CaeConfig::finetuned_variant(), 43);
  auto pa = a.named_params();
  auto pb = b.named_params();
  auto pc = c.named_params();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_diff_seed43 = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    EXPECT_EQ(pa[i].tensor->data, pb[i].tensor->data) << pa[i].name;
    if (pa[i].tensor->data != pc[i].tensor->data) any_diff_seed43 = true;
  }
  EXPECT_TRUE(any_diff_seed43);
}

TEST(CaeForward, ShapesThroughTheBlocks) {
  Cae<float> model(CaeConfig::finetuned_variant(), 1);
  Rng rng(2);
  for (int n : {1, 3}) {
    Tensor32 batch = random_batch(n, 64, 7 + n);
    auto out = model.forward_autoencode(batch, false, rng);
    EXPECT_EQ(out.recon.shape, batch.shape);
    EXPECT_EQ(out.code.shape, (std::vector<int>{n, 50}));
    for (float v : out.recon.data) {
      EXPECT_GT(v, 0.f);
      EXPECT_LT(v, 1.f);
    }
  }
}

TEST(CaeForward, WrongInputSizeThrows) {
  Cae<float> model(CaeConfig::finetuned_variant(), 1);
  Rng rng(2);
  Tensor32 batch = random_batch(1, 32, 3);
  EXPECT_THROW(model.forward_autoencode(batch, false, rng), DomainError);
}

TEST(CaeForward, EvalModeDeterministic) {
  Cae<float> model(CaeConfig::finetuned_variant(), 5);
  Rng r1(100), r2(200);  // different streams must not matter in eval mode
  Tensor32 batch = random_batch(2, 64, 9);
  auto a = model.forward_autoencode(batch, false, r1);
  auto b = model.forward_autoencode(batch, false, r2);
  EXPECT_EQ(a.recon.data, b.recon.data);
  EXPECT_EQ(a.code.data, b.code.data);
}

TEST(CaeEstimate, UnitNormPositiveRows) {
  Cae<float> model(CaeConfig::finetuned_variant(), 6);
  Tensor32 batch = random_batch(4, 64, 11);
  Tensor32 est = model.forward_estimate(batch);
  ASSERT_EQ(est.shape, (std::vector<int>{4, 3}));
  for (int n = 0; n < 4; ++n) {
    double norm = 0;
    for (int j = 0; j < 3; ++j) {
      EXPECT_GT(est.at2(n, j), 0.f);
      norm += double(est.at2(n, j)) * est.at2(n, j);
    }
    EXPECT_NEAR(norm, 1.0, 1e-5);
  }
}

TEST(CaeEstimate, PermutingBatchPermutesOutputs) {
  Cae<float> model(CaeConfig::finetuned_variant(), 8);
  Tensor32 batch = random_batch(3, 64, 13);
  Tensor32 est = model.forward_estimate(batch);

  // swap items 0 and 2
  Tensor32 swapped = batch;
  const std::size_t item = batch.numel() / 3;
  for (std::size_t i = 0; i < item; ++i) {
    std::swap(swapped.data[i], swapped.data[2 * item + i]);
  }
  Tensor32 est2 = model.forward_estimate(swapped);
  for (int j = 0; j < 3; ++j) {
    EXPECT_FLOAT_EQ(est.at2(0, j), est2.at2(2, j));
    EXPECT_FLOAT_EQ(est.at2(2, j), est2.at2(0, j));
    EXPECT_FLOAT_EQ(est.at2(1, j), est2.at2(1, j));
  }
}

TEST(CaeEstimate, CompositeVariantReadsCodeDirectly) {
  Cae<float> model(CaeConfig::composite_variant(), 9);
  Tensor32 batch = random_batch(2, 64, 15);
  Tensor32 est = model.forward_estimate(batch);
  EXPECT_EQ(est.shape, (std::vector<int>{2, 3}));
}

TEST(CaeEstimate, HeadlessWideCodeThrows) {
  CaeConfig cfg = CaeConfig::finetuned_variant();
  cfg.with_head = false;  // 50-channel code with no way down to 3
  Cae<float> model(cfg, 10);
  Tensor32 batch = random_batch(1, 64, 17);
  EXPECT_THROW(model.forward_estimate(batch), ConfigError);
}

TEST(CaeParams, BudgetMatchesArchitecture) {
  Cae<float> ft(CaeConfig::finetuned_variant(), 3);
  ParamBudget b = param_budget(ft);
  EXPECT_EQ(b.encoder, 118464u);
  EXPECT_EQ(b.middle, 12850u);
  EXPECT_EQ(b.decoder, 131267u);
  EXPECT_EQ(b.head, 813u);
  EXPECT_EQ(b.total(), param_count(ft));
  EXPECT_EQ(b.estimator(), 132127u);

  // paper-scale budget: well inside [100k, 200k]
  EXPECT_GE(b.estimator(), 100000u);
  EXPECT_LE(b.estimator(), 200000u);

  Cae<float> comp(CaeConfig::composite_variant(), 3);
  EXPECT_EQ(param_budget(comp).head, 0u);
  EXPECT_LT(param_count(comp), param_count(ft));
}

TEST(CaeGrads, ReachEveryParameter) {
  CaeConfig cfg = CaeConfig::finetuned_variant();
  cfg.input_size = 16;
  cfg.dropout_rate = 0.0;
  Cae<float> model(cfg, 21);
  Rng rng(22);
  Tensor32 batch = random_batch(2, 16, 23);

  auto ae_params = model.autoencoder_params();
  zero_grads(ae_params);
  auto out = model.forward_autoencode(batch, true, rng);
  Tensor32 grad_recon;
  nn::bce_loss(out.recon, batch, &grad_recon);
  model.backward_autoencode(grad_recon);
  for (auto* p : ae_params) {
    ASSERT_EQ(p->grad.size(), p->numel());
    bool any = false;
    for (float v : p->grad)
      if (v != 0.f) any = true;
    EXPECT_TRUE(any);
  }

  auto est_params = model.estimator_params();
  zero_grads(est_params);
  Tensor32 est = model.forward_estimate(batch, true, &rng);
  Tensor32 gt({2, 3});
  gt.data = {1.f, 0.6f, 0.4f, 0.5f, 1.f, 0.8f};
  Tensor32 grad_est;
  nn::rae_loss(est, gt, &grad_est);
  model.backward_estimate(grad_est);
  for (auto* p : est_params) {
    bool any = false;
    for (float v : p->grad)
      if (v != 0.f) any = true;
    EXPECT_TRUE(any);
  }
}

TEST(CaeSerialization, RoundTripBitExact) {
  const fs::path path = temp_dir() / "roundtrip.c3ae";
  Cae<float> model(CaeConfig::finetuned_variant(), 33);
  save_cae(model, path);
  Cae<float> loaded = load_cae(path);
  EXPECT_EQ(loaded.config().code_channels, 50);
  EXPECT_TRUE(loaded.config().with_head);
  auto pa = model.named_params();
  auto pb = loaded.named_params();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i)
    EXPECT_EQ(pa[i].tensor->data, pb[i].tensor->data) << pa[i].name;

  // saving the loaded model reproduces the file byte for byte
  const fs::path path2 = temp_dir() / "roundtrip2.c3ae";
  save_cae(loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  EXPECT_EQ(s1, s2);
}

TEST(CaeSerialization, CountMatchesSerializedSizes) {
  const fs::path path = temp_dir() / "count.c3ae";
  Cae<float> model(CaeConfig::composite_variant(), 34);
  save_cae(model, path);

  // independent walk over the container, summing tensor sizes
  std::ifstream is(path, std::ios::binary);
  is.seekg(4 + 4 + 4 + 4 + 4 + 1);  // magic/version/config block
  std::uint32_t count = 0;
  is.read(reinterpret_cast<char*>(&count), 4);
  std::size_t total = 0;
  for (std::uint32_t t = 0; t < count; ++t) {
    std::uint32_t name_len = 0;
    is.read(reinterpret_cast<char*>(&name_len), 4);
    is.seekg(name_len, std::ios::cur);
    std::uint32_t ndim = 0;
    is.read(reinterpret_cast<char*>(&ndim), 4);
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      std::int32_t dim = 0;
      is.read(reinterpret_cast<char*>(&dim), 4);
      n *= static_cast<std::size_t>(dim);
    }
    total += n;
    is.seekg(static_cast<std::streamoff>(n * 4), std::ios::cur);
  }
  ASSERT_TRUE(is.good());
  EXPECT_EQ(total, param_count(model));
}

TEST(CaeSerialization, CorruptedMagic) {
  const fs::path path = temp_dir() / "badmagic.c3ae";
  Cae<float> model(CaeConfig::composite_variant(), 35);
  save_cae(model, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  try {
    load_cae(path);
    FAIL() << "expected ModelFormatError";
  } catch (const ModelFormatError& e) {
    EXPECT_EQ(e.kind, ModelFormatError::Kind::BadMagic);
  }
}

TEST(CaeSerialization, UnsupportedVersion) {
  const fs::path path = temp_dir() / "badversion.c3ae";
  Cae<float> model(CaeConfig::composite_variant(), 36);
  save_cae(model, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const std::uint32_t v = 99;
    f.write(reinterpret_cast<const char*>(&v), 4);
  }
  try {
    load_cae(path);
    FAIL() << "expected ModelFormatError";
  } catch (const ModelFormatError& e) {
    EXPECT_EQ(e.kind, ModelFormatError::Kind::BadVersion);
  }
}

TEST(CaeSerialization, TruncatedFile) {
  const fs::path path = temp_dir() / "trunc.c3ae";
  Cae<float> model(CaeConfig::composite_variant(), 37);
  save_cae(model, path);
  const auto size = fs::file_size(path);
  fs::resize_file(path, size / 2);
  try {
    load_cae(path);
    FAIL() << "expected ModelFormatError";
  } catch (const ModelFormatError& e) {
    EXPECT_EQ(e.kind, ModelFormatError::Kind::Truncated);
  }
}

TEST(CaeSerialization, MissingFile) {
  EXPECT_THROW(load_cae(temp_dir() / "nope.c3ae"), IoError);
}
