#include "taxemb/model.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <limits>

#include "io_util.hpp"

namespace taxemb {

namespace {

constexpr char kMagic[8] = {'T', 'X', 'E', 'M', 'B', 'C', 'K', '1'};

// cos(a, b) with the epsilon-guarded denominator, and its gradients with
// respect to a and b accumulated (scaled by `coef`) into ga / gb when those
// spans are non-empty.
double cosine_with_grad(std::span<const double> a, std::span<const double> b, double coef,
                        std::span<double> ga, std::span<double> gb) {
  const double ab = dot(a, b);
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double denom = na * nb + kCosineEps;
  const double c = ab / denom;
  if (coef == 0.0) return c;
  // d/da [ab / (|a||b| + eps)] = b / D - ab |b| a / (|a| D^2)
  if (!ga.empty()) {
    const double k = ab * nb / (na * denom * denom);
    for (std::size_t i = 0; i < a.size(); ++i) ga[i] += coef * (b[i] / denom - k * a[i]);
  }
  if (!gb.empty()) {
    const double k = ab * na / (nb * denom * denom);
    for (std::size_t i = 0; i < b.size(); ++i) gb[i] += coef * (a[i] / denom - k * b[i]);
  }
  return c;
}

struct RelationRows {
  const Matrix* anchor;
  const Matrix* target;  // positives and negatives
  Matrix* anchor_grad;   // null when the anchor is a frozen job vector
  Matrix* target_grad;
};

RelationRows rows_for(Relation r, const ModelParams& p, const LabeledJobs& jobs, Gradients* g) {
  switch (r) {
    case Relation::SocCar:
      return {&p.soc_emb, &p.car_emb, g ? &g->soc_emb : nullptr, g ? &g->car_emb : nullptr};
    case Relation::CarCar:
      return {&p.car_emb, &p.car_emb, g ? &g->car_emb : nullptr, g ? &g->car_emb : nullptr};
    case Relation::JobSoc:
      return {&jobs.vectors, &p.soc_emb, nullptr, g ? &g->soc_emb : nullptr};
    case Relation::JobCar:
      return {&jobs.vectors, &p.car_emb, nullptr, g ? &g->car_emb : nullptr};
  }
  return {};
}

void check_shapes(const ModelParams& p, const LabeledJobs& jobs) {
  const std::size_t q = p.q();
  if (p.car_emb.cols() != q || p.soc_head.rows() != q || p.car_head.rows() != q ||
      p.soc_head.cols() != p.m() || p.car_head.cols() != p.n()) {
    throw DimensionError("inconsistent parameter shapes");
  }
  if (jobs.size() > 0 && jobs.vectors.cols() != q) {
    throw DimensionError("job vectors have dimension " + std::to_string(jobs.vectors.cols()) +
                         ", parameters expect " + std::to_string(q));
  }
}

// Cross-entropy term for one head; accumulates coef * dL/dW into `grad`.
double ce_term(const Matrix& head, std::span<const double> x, std::size_t label, double coef, Matrix* grad) {
  const Vector probs = softmax(head_logits(head, x));
  const double loss = ce_loss(probs, label);
  if (grad == nullptr || coef == 0.0) return loss;
  // d/dz [-log(p_y + eps)] = p_y / (p_y + eps) * (p - onehot(y))
  const double scale = coef * probs[label] / (probs[label] + kLogEps);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] == 0.0) continue;
    for (std::size_t j = 0; j < probs.size(); ++j) {
      const double dz = probs[j] - (j == label ? 1.0 : 0.0);
      (*grad)(k, j) += scale * x[k] * dz;
    }
  }
  return loss;
}

std::pair<LossBreakdown, Gradients> evaluate(const ModelParams& params, const LabeledJobs& jobs,
                                             const Batch& batch, const LossWeights& w, bool want_grad) {
  check_shapes(params, jobs);
  w.validate();
  LossBreakdown out;
  Gradients grad = want_grad ? params.zeros_like() : Gradients{};
  Gradients* g = want_grad ? &grad : nullptr;

  // Classification terms.
  if (batch.jobs.empty()) {
    out.empty_components += (w.lambda[0] > 0.0) + (w.lambda[1] > 0.0);
  } else {
    const double inv = 1.0 / static_cast<double>(batch.jobs.size());
    for (std::size_t row : batch.jobs) {
      if (row >= jobs.size()) throw DimensionError("batch job row out of range");
      const auto x = jobs.vectors.row(row);
      out.l_soc += ce_term(params.soc_head, x, jobs.soc[row], w.lambda[0] * inv, g ? &g->soc_head : nullptr);
      out.l_carotene +=
          ce_term(params.car_head, x, jobs.carotene[row], w.lambda[1] * inv, g ? &g->car_head : nullptr);
    }
    out.l_soc *= inv;
    out.l_carotene *= inv;
  }

  // Hinge terms.
  double* slots[4] = {&out.l_soc_car, &out.l_car_car, &out.l_job_soc, &out.l_job_car};
  for (Relation r : kAllRelations) {
    const auto idx = static_cast<std::size_t>(r);
    const double lambda = w.lambda[2 + idx];
    const auto& trips = batch.of(r);
    if (trips.empty()) {
      out.empty_components += lambda > 0.0;
      continue;
    }
    const RelationRows rows = rows_for(r, params, jobs, g);
    const double coef = want_grad ? lambda / static_cast<double>(trips.size()) : 0.0;
    double sum = 0.0;
    for (const auto& t : trips) {
      if (t.anchor >= rows.anchor->rows() || t.positive >= rows.target->rows() ||
          t.negative >= rows.target->rows()) {
        throw DimensionError(std::string(relation_name(r)) + " triplet index out of range");
      }
      const auto a = rows.anchor->row(t.anchor);
      const auto p = rows.target->row(t.positive);
      const auto n = rows.target->row(t.negative);
      const double inside = w.margin - cosine(a, p) + cosine(a, n);
      // Strictly positive only: the kink itself gets subgradient 0.
      if (inside <= 0.0) continue;
      sum += inside;
      if (coef == 0.0) continue;
      std::span<double> ga = rows.anchor_grad ? rows.anchor_grad->row(t.anchor) : std::span<double>{};
      cosine_with_grad(a, p, -coef, ga, rows.target_grad->row(t.positive));
      cosine_with_grad(a, n, coef, ga, rows.target_grad->row(t.negative));
    }
    *slots[idx] = sum / static_cast<double>(trips.size());
  }

  const auto comps = out.components();
  for (std::size_t i = 0; i < 6; ++i) out.total += w.lambda[i] * comps[i];
  return {out, std::move(grad)};
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ParseError(path + ": truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

ModelParams ModelParams::zeros(std::size_t m, std::size_t n, std::size_t q) {
  return {Matrix(m, q), Matrix(n, q), Matrix(q, m), Matrix(q, n)};
}

InitMode parse_init_mode(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "random") return InitMode::Random;
  if (t == "text" || t == "signature" || t == "fromsignaturetext") return InitMode::FromSignatureText;
  throw ParseError("unknown init mode '" + std::string(text) + "'");
}

std::string_view init_mode_name(InitMode mode) {
  return mode == InitMode::Random ? "random" : "text";
}

ModelParams init_params(const Taxonomy& taxonomy, std::size_t q, InitMode mode, std::uint64_t seed,
                        const TextEncoder* encoder) {
  if (q < 1) throw std::invalid_argument("embedding dimension must be positive");
  ModelParams p = ModelParams::zeros(taxonomy.soc_count(), taxonomy.carotene_count(), q);
  Rng rng(seed);
  for (Matrix* block : p.blocks()) {
    for (double& v : block->values()) v = rng.uniform(-kInitRange, kInitRange);
  }
  if (mode == InitMode::FromSignatureText) {
    if (encoder == nullptr) throw std::invalid_argument("signature-text init requires an encoder");
    if (encoder->dim() != q) throw DimensionError("encoder dim does not match q");
    for (std::size_t s = 0; s < taxonomy.soc_count(); ++s) {
      const Vector v = encoder->encode(taxonomy.socs()[s].signature);
      std::copy(v.begin(), v.end(), p.soc_emb.row(s).begin());
    }
    for (std::size_t k = 0; k < taxonomy.carotene_count(); ++k) {
      const Vector v = encoder->encode(taxonomy.carotenes()[k].signature);
      std::copy(v.begin(), v.end(), p.car_emb.row(k).begin());
    }
  }
  return p;
}

void LossWeights::validate() const {
  for (double l : lambda) {
    if (!(l >= 0.0 && l <= 1.0)) throw std::invalid_argument("loss weights must lie in [0, 1]");
  }
  if (!(margin >= 0.0)) throw std::invalid_argument("margin must be >= 0");
}

LabeledJobs encode_jobs(std::span<const JobRecord> jobs, const Taxonomy& taxonomy, const TextEncoder& encoder) {
  LabeledJobs out;
  out.vectors = Matrix(jobs.size(), encoder.dim());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    out.ids.push_back(jobs[i].id);
    out.soc.push_back(taxonomy.require_soc(jobs[i].soc));
    out.carotene.push_back(taxonomy.require_carotene(jobs[i].carotene));
    const Vector v = encoder.encode(concat_features(jobs[i]));
    std::copy(v.begin(), v.end(), out.vectors.row(i).begin());
  }
  return out;
}

Vector softmax(std::span<const double> logits) {
  Vector p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

Vector head_logits(const Matrix& head, std::span<const double> job_vec) {
  if (job_vec.size() != head.rows()) {
    throw DimensionError("job vector has length " + std::to_string(job_vec.size()) + ", head expects " +
                         std::to_string(head.rows()));
  }
  Vector z(head.cols(), 0.0);
  for (std::size_t k = 0; k < head.rows(); ++k) {
    const double x = job_vec[k];
    if (x == 0.0) continue;
    const auto row = head.row(k);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] += x * row[j];
  }
  return z;
}

std::pair<Vector, Vector> classify(const ModelParams& params, std::span<const double> job_vec) {
  return {softmax(head_logits(params.soc_head, job_vec)), softmax(head_logits(params.car_head, job_vec))};
}

double ce_loss(std::span<const double> probs, std::size_t true_index) {
  if (true_index >= probs.size()) {
    throw std::out_of_range("ce_loss: class index " + std::to_string(true_index) + " out of range");
  }
  return -std::log(probs[true_index] + kLogEps);
}

double margin_triplet_loss(std::span<const double> anchor, std::span<const double> pos,
                           std::span<const double> neg, double margin) {
  if (anchor.size() != pos.size() || anchor.size() != neg.size()) {
    throw DimensionError("margin_triplet_loss: length mismatch");
  }
  return std::max(0.0, margin - cosine(anchor, pos) + cosine(anchor, neg));
}

double contrastive_loss_nomargin(std::span<const double> anchor, std::span<const double> pos,
                                 std::span<const Vector> negatives) {
  if (negatives.empty()) throw std::invalid_argument("contrastive loss needs at least one negative");
  const double sp = dot(anchor, pos);
  std::vector<double> sn;
  for (const auto& n : negatives) sn.push_back(dot(anchor, n));
  const double mx = *std::max_element(sn.begin(), sn.end());
  if (mx <= sp) {
    double rest = 0.0;
    for (double s : sn) rest += std::exp(s - sp);
    return std::log1p(rest);
  }
  double total = std::exp(sp - mx);
  for (double s : sn) total += std::exp(s - mx);
  return (mx - sp) + std::log(total);
}

LossBreakdown total_loss(const ModelParams& params, const LabeledJobs& jobs, const Batch& batch,
                         const LossWeights& weights) {
  return evaluate(params, jobs, batch, weights, false).first;
}

Gradients grad_total_loss(const ModelParams& params, const LabeledJobs& jobs, const Batch& batch,
                          const LossWeights& weights) {
  return evaluate(params, jobs, batch, weights, true).second;
}

std::pair<LossBreakdown, Gradients> loss_and_grad(const ModelParams& params, const LabeledJobs& jobs,
                                                  const Batch& batch, const LossWeights& weights) {
  return evaluate(params, jobs, batch, weights, true);
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, std::uint64_t id_order_hash) {
  auto out = open_output(path, std::ios::out | std::ios::binary | std::ios::trunc);
  out.write(kMagic, sizeof kMagic);
  write_u64(out, params.m());
  write_u64(out, params.n());
  write_u64(out, params.q());
  write_u64(out, id_order_hash);
  for (const Matrix* block : params.blocks()) {
    for (double v : block->values()) write_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  finish_output(out, path);
}

ModelParams load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_hash) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  const std::string name = path.string();
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw ParseError(name + ": not a checkpoint file");
  }
  const std::uint64_t m = read_u64(in, name);
  const std::uint64_t n = read_u64(in, name);
  const std::uint64_t q = read_u64(in, name);
  const std::uint64_t hash = read_u64(in, name);
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 24;
  if (m == 0 || n == 0 || q == 0 || m > kLimit || n > kLimit || q > kLimit) {
    throw ParseError(name + ": implausible checkpoint shape");
  }
  if (expected_hash != 0 && hash != expected_hash) {
    throw ValidationError(name + ": checkpoint was trained against a different taxonomy");
  }
  ModelParams p = ModelParams::zeros(m, n, q);
  for (Matrix* block : p.blocks()) {
    for (double& v : block->values()) {
      v = std::bit_cast<double>(read_u64(in, name));
      if (!std::isfinite(v)) throw ValidationError(name + ": non-finite parameter");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError(name + ": trailing bytes in checkpoint");
  return p;
}

}  // namespace taxemb
