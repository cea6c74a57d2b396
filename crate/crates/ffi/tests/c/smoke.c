#include <math.h>
#include <stdio.h>
#include <string.h>
#include "nhlab.h"

static int check(int ok, const char *what) {
  if (!ok) {
    fprintf(stderr, "failed: %s (%s)\n", what, nhlab_last_error_message());
    return 1;
  }
  return 0;
}

int main(void) {
  int bad = 0;
  NhlabComplex one = {1.0, 0.0};
  NhlabComplex i = {0.0, 1.0};
  NhlabModel *m = NULL;
  bad += check(nhlab_model_new(NHLAB_MODEL_KIND_JORDAN_BOUND, one, 0.0, i, 1, &m) == NHLAB_STATUS_OK, "model");
  NhlabComplex b;
  bad += check(nhlab_model_binorm(m, 0, 1, 1e-10, &b) == NHLAB_STATUS_OK, "binorm call");
  bad += check(fabs(b.re - 1.0) < 1e-8 && fabs(b.im) < 1e-8, "psi0 psi1 binorm is one");
  bad += check(nhlab_model_binorm(m, 0, 0, 1e-10, &b) == NHLAB_STATUS_OK, "self binorm call");
  bad += check(hypot(b.re, b.im) < 1e-8, "psi0 is self-orthogonal");
  NhlabComplex t, r;
  bad += check(nhlab_model_transmission(m, 1.0, &t, &r) == NHLAB_STATUS_OK, "transmission");
  bad += check(fabs(hypot(t.re, t.im) - 1.0) < 1e-6 && hypot(r.re, r.im) < 1e-8, "reflectionless");
  nhlab_model_free(m);

  NhlabModel *z0 = NULL;
  NhlabStatus s = nhlab_model_new(NHLAB_MODEL_KIND_JORDAN_BOUND, one, 0.0, one, 1, &z0);
  bad += check(s == NHLAB_STATUS_INVALID_PARAMETER && z0 == NULL, "real shift rejected");
  bad += check(strstr(nhlab_last_error_message(), "Im z") != NULL, "error message");

  NhlabReport *rep = NULL;
  bad += check(nhlab_verify("finite", 42, &rep) == NHLAB_STATUS_OK, "verify");
  bool pass = false;
  bad += check(nhlab_report_pass(rep, &pass) == NHLAB_STATUS_OK && pass, "finite suite passes");
  char *json = NULL;
  bad += check(nhlab_report_json(rep, &json) == NHLAB_STATUS_OK && strstr(json, "\"schema\": 1") != NULL, "json");
  nhlab_string_free(json);
  nhlab_report_free(rep);
  bad += check(nhlab_verify("nope", 1, &rep) == NHLAB_STATUS_INVALID_PARAMETER, "unknown suite");
  printf("%s %s\n", nhlab_version(), bad ? "FAIL" : "OK");
  return bad;
}
