#include "clarity/losses.hpp"

#include <cmath>

#include "clarity/errors.hpp"

namespace clarity {

using namespace ops;

Var log_sim(const Var& u, const Var& v, double tau) {
  if (u->val.ndim() != 1 || v->val.ndim() != 1)
    throw ShapeError("log_sim expects 1-D feature vectors");
  if (!u->val.same_shape(v->val)) throw ShapeError("log_sim dimension mismatch");
  if (tau <= 0.0) throw ValueError("temperature must be > 0");
  const Var nu = vsqrt(dot(u, u));
  const Var nv = vsqrt(dot(v, v));
  if (nu->val[0] <= 0.0 || nv->val[0] <= 0.0)
    throw ValueError("log_sim: zero-norm feature vector");
  const Var cos = divide(dot(u, v), mul(nu, nv));
  return smul(cos, 1.0 / tau);
}

Var extended_contrastive(const Var& anchor, const std::vector<Var>& positives,
                         const std::vector<Var>& negatives, double tau) {
  if (positives.empty()) throw ValueError("contrastive loss needs at least one positive");
  if (negatives.empty()) throw ValueError("contrastive loss needs at least one negative");
  std::vector<Var> sims;
  sims.reserve(positives.size() + negatives.size());
  for (const auto& p : positives) sims.push_back(log_sim(anchor, p, tau));
  std::vector<Var> pos_sims = sims;  // first |P| entries
  for (const auto& n : negatives) sims.push_back(log_sim(anchor, n, tau));
  const Var lse_all = logsumexp(stack_scalars(sims));
  const Var lse_pos = pos_sims.size() == 1 ? pos_sims.front()
                                           : logsumexp(stack_scalars(pos_sims));
  return sub(lse_all, lse_pos);
}

Var contrastive(const Var& anchor, const Var& positive,
                const std::vector<Var>& negatives, double tau) {
  return extended_contrastive(anchor, {positive}, negatives, tau);
}

Var pixel_l1(const Var& a, const Var& b) { return mean_abs_diff(a, b); }

Var identity_loss(const Var& restored_clear, const Var& clear) {
  return mean_abs_diff(restored_clear, clear);
}

Var lsgan_d(const Var& d_fake, const Var& d_real) {
  return add(mean_sq_gap(d_fake, 0.0), mean_sq_gap(d_real, 1.0));
}

Var lsgan_g(const Var& d_fake) { return mean_sq_gap(d_fake, 1.0); }

std::pair<Var, Var> gan_losses(const Var& d_fake, const Var& d_real) {
  return {lsgan_d(d_fake, d_real), lsgan_g(d_fake)};
}

double schedule_value(const WeightSchedule& s, int epoch) {
  if (epoch < 0) throw ValueError("schedule epoch must be >= 0");
  if (s.decay <= 0.0 || s.decay > 1.0) throw ValueError("schedule decay must be in (0,1]");
  return s.initial * std::pow(s.decay, epoch);
}

Var kt_total(const Var& l_pixel, const Var& l_m, double alpha2) {
  return add(l_pixel, smul(l_m, alpha2));
}

Var da_total(const Var& l_gan_g, const Var& l_idt, const Var& l_em,
             double lambda2, double lambda3) {
  return add(l_gan_g, add(smul(l_idt, lambda2), smul(l_em, lambda3)));
}

namespace {

Var mean_of(const std::vector<Var>& terms) {
  return mean_all(stack_scalars(terms));
}

int batch_rows(const Var& m, const char* what) {
  if (m->val.ndim() != 2) throw ShapeError(std::string(what) + ": expected (N,d) matrix");
  return m->val.dim(0);
}

}  // namespace

MgclTerms mgcl_from_features(const Var& student_feat, const Var& teacher_feat,
                             const Var& student_img_feat, const Var& teacher_img_feat,
                             const Var& input_img_feat, double alpha1, double tau) {
  const int n = batch_rows(student_feat, "mgcl");
  if (batch_rows(teacher_feat, "mgcl") != n || batch_rows(student_img_feat, "mgcl") != n ||
      batch_rows(teacher_img_feat, "mgcl") != n || batch_rows(input_img_feat, "mgcl") != n)
    throw ShapeError("mgcl: batch size mismatch between feature matrices");
  if (n < 2) throw ValueError("mgcl needs a batch of at least 2");

  std::vector<Var> fg_terms, ig_terms;
  for (int i = 0; i < n; ++i) {
    std::vector<Var> feat_negs, img_negs;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;  // a sample is never its own negative
      feat_negs.push_back(row(student_feat, j));
      img_negs.push_back(row(input_img_feat, j));
    }
    fg_terms.push_back(
        contrastive(row(student_feat, i), row(teacher_feat, i), feat_negs, tau));
    ig_terms.push_back(
        contrastive(row(student_img_feat, i), row(teacher_img_feat, i), img_negs, tau));
  }
  MgclTerms out;
  out.fg = mean_of(fg_terms);
  out.ig = mean_of(ig_terms);
  out.m = add(out.ig, smul(out.fg, alpha1));
  return out;
}

ExMgclTerms ex_mgcl_from_features(const Var& degraded_feat, const Var& clear_feat,
                                  const Var& degraded_img_feat, const Var& clear_img_feat,
                                  const Var& degraded_input_feat, double lambda1, double tau) {
  const int n = batch_rows(degraded_feat, "ex_mgcl");
  const int nc = batch_rows(clear_feat, "ex_mgcl");
  if (nc != n) throw ShapeError("ex_mgcl: clear batch and degraded batch sizes differ");
  if (batch_rows(degraded_img_feat, "ex_mgcl") != n ||
      batch_rows(clear_img_feat, "ex_mgcl") != n ||
      batch_rows(degraded_input_feat, "ex_mgcl") != n)
    throw ShapeError("ex_mgcl: batch size mismatch between feature matrices");

  std::vector<Var> efg_terms, eig_terms;
  for (int i = 0; i < n; ++i) {
    std::vector<Var> positives_feat, positives_img;
    for (int p = 0; p < n; ++p) {
      positives_feat.push_back(row(clear_feat, p));
      positives_img.push_back(row(clear_img_feat, p));
    }
    std::vector<Var> feat_negs, img_negs;
    for (int j = 0; j < n; ++j) {
      if (n > 1 && j == i) continue;
      feat_negs.push_back(row(degraded_feat, j));
      img_negs.push_back(row(degraded_input_feat, j));
    }
    efg_terms.push_back(
        extended_contrastive(row(degraded_feat, i), positives_feat, feat_negs, tau));
    eig_terms.push_back(
        extended_contrastive(row(degraded_img_feat, i), positives_img, img_negs, tau));
  }
  ExMgclTerms out;
  out.efg = mean_of(efg_terms);
  out.eig = mean_of(eig_terms);
  out.em = add(out.eig, smul(out.efg, lambda1));
  return out;
}

namespace {

Var tap_features(const Var& fmap, const PerceptualExtractor* feature_phi) {
  return feature_phi ? feature_phi->extract(fmap) : pool_features(fmap);
}

}  // namespace

MgclTerms mgcl(const BackboneOutput& student, const Tensor& teacher_restored,
               const Tensor& teacher_features, const Tensor& degraded_inputs,
               double alpha1, double tau, const PerceptualExtractor& phi,
               const PerceptualExtractor* feature_phi) {
  if (student.features.empty()) throw ValueError("mgcl: student output has no feature tap");
  const Var student_feat = tap_features(student.features.front(), feature_phi);
  const Var teacher_feat = tap_features(make_const(teacher_features), feature_phi);
  const Var student_img_feat = phi.extract(student.restored);
  const Var teacher_img_feat = phi.extract(make_const(teacher_restored));
  const Var input_img_feat = phi.extract(make_const(degraded_inputs));
  return mgcl_from_features(student_feat, teacher_feat, student_img_feat,
                            teacher_img_feat, input_img_feat, alpha1, tau);
}

ExMgclTerms ex_mgcl(const BackboneOutput& on_degraded, const BackboneOutput& on_clear,
                    const Tensor& degraded_inputs, double lambda1, double tau,
                    const PerceptualExtractor& phi,
                    const PerceptualExtractor* feature_phi) {
  if (on_degraded.features.empty() || on_clear.features.empty())
    throw ValueError("ex_mgcl: backbone output has no feature tap");
  const Var degraded_feat = tap_features(on_degraded.features.front(), feature_phi);
  const Var clear_feat = tap_features(on_clear.features.front(), feature_phi);
  const Var degraded_img_feat = phi.extract(on_degraded.restored);
  const Var clear_img_feat = phi.extract(on_clear.restored);
  const Var degraded_input_feat = phi.extract(make_const(degraded_inputs));
  return ex_mgcl_from_features(degraded_feat, clear_feat, degraded_img_feat,
                               clear_img_feat, degraded_input_feat, lambda1, tau);
}

}  // namespace clarity
