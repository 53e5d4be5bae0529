#ifndef CLARITY_LOSSES_HPP
#define CLARITY_LOSSES_HPP

#include <utility>
#include <vector>

#include "clarity/autodiff.hpp"
#include "clarity/networks.hpp"

namespace clarity {

// Contrastive machinery. Similarities are handled in log space throughout:
// log sim(u,v) = cos(u,v)/tau is never exponentiated directly, and the
// softmax-style ratios are evaluated with the log-sum-exp identity. At the
// default temperature tau = 1e-6 the ratio degenerates to a near-hard-max
// margin; the log-space path stays finite where direct exponentiation
// overflows.

// cos(u,v)/tau for 1-D vectors. Throws ValueError on zero-norm inputs.
Var log_sim(const Var& u, const Var& v, double tau);

// -log( e^{s+} / (e^{s+} + sum_q e^{s-_q}) ), computed as
// logsumexp(s+, s-_1..s-_b) - s+. Requires exactly one positive and at least
// one negative.
Var contrastive(const Var& anchor, const Var& positive,
                const std::vector<Var>& negatives, double tau);

// -log( sum_p e^{s+_p} / (sum_p e^{s+_p} + sum_q e^{s-_q}) ). With a single
// positive this equals contrastive() bitwise.
Var extended_contrastive(const Var& anchor, const std::vector<Var>& positives,
                         const std::vector<Var>& negatives, double tau);

// Mean absolute difference (used student-vs-teacher and for the identity
// mapping term).
Var pixel_l1(const Var& a, const Var& b);
Var identity_loss(const Var& restored_clear, const Var& clear);

// Least-squares adversarial terms on patch logit maps.
Var lsgan_d(const Var& d_fake, const Var& d_real);  // mean(D(fake)^2) + mean((D(real)-1)^2)
Var lsgan_g(const Var& d_fake);                     // mean((D(fake)-1)^2)
std::pair<Var, Var> gan_losses(const Var& d_fake, const Var& d_real);  // (L_D, L_G)

struct WeightSchedule {
  double initial = 0.5;
  double decay = 0.99;  // in (0, 1]
};

// initial * decay^epoch
double schedule_value(const WeightSchedule& s, int epoch);

struct LossWeights {
  double alpha1 = 0.5;   // feature-grained weight, knowledge-transfer stage
  double alpha2 = 0.1;   // contrastive weight in the transfer objective
  double lambda1 = 0.5;  // feature-grained weight, adaptation stage
  double lambda2 = 0.1;  // identity weight
  double lambda3 = 0.1;  // contrastive weight in the adaptation objective
};

// Weighted sums of the stage objectives.
Var kt_total(const Var& l_pixel, const Var& l_m, double alpha2);
Var da_total(const Var& l_gan_g, const Var& l_idt, const Var& l_em,
             double lambda2, double lambda3);

struct MgclTerms {
  Var fg;  // feature-grained
  Var ig;  // image-grained
  Var m;   // ig + alpha1 * fg
};

// Multi-grained contrastive terms from per-sample feature rows. All matrices
// are (N,d); anchors come from the student, positives from the kind-matched
// teacher, negatives from the other batch members (the anchor's own index is
// excluded).
MgclTerms mgcl_from_features(const Var& student_feat, const Var& teacher_feat,
                             const Var& student_img_feat, const Var& teacher_img_feat,
                             const Var& input_img_feat, double alpha1, double tau);

struct ExMgclTerms {
  Var efg;
  Var eig;
  Var em;  // eig + lambda1 * efg
};

// Extended variant: each degraded anchor takes the whole clear batch as
// positives and the other degraded batch members as negatives. With a batch
// of one, the "other members" rule would leave the negative set empty, so the
// literal per-equation set (the sample itself) is used instead.
ExMgclTerms ex_mgcl_from_features(const Var& degraded_feat, const Var& clear_feat,
                                  const Var& degraded_img_feat, const Var& clear_img_feat,
                                  const Var& degraded_input_feat, double lambda1, double tau);

// Convenience wrappers operating on network outputs. `teacher_features` is
// the raw (N,C,H,W) tap. The feature-grained terms pool the taps directly;
// passing `feature_phi` (an extractor built for the tap's channel count)
// instead routes them through that extractor first.
MgclTerms mgcl(const BackboneOutput& student, const Tensor& teacher_restored,
               const Tensor& teacher_features, const Tensor& degraded_inputs,
               double alpha1, double tau, const PerceptualExtractor& phi,
               const PerceptualExtractor* feature_phi = nullptr);

ExMgclTerms ex_mgcl(const BackboneOutput& on_degraded, const BackboneOutput& on_clear,
                    const Tensor& degraded_inputs, double lambda1, double tau,
                    const PerceptualExtractor& phi,
                    const PerceptualExtractor* feature_phi = nullptr);

}  // namespace clarity

#endif
