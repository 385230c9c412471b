/* Plain C consumer of the shared library. */
#include <plasso/plasso.h>

#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#define N 60
#define P 3

static double uniform(unsigned long long* s) {
  *s = *s * 6364136223846793005ULL + 1442695040888963407ULL;
  return ((*s >> 11) + 0.5) / 9007199254740992.0;
}

static int check(plasso_status st, const char* what) {
  if (st != PLASSO_OK) {
    fprintf(stderr, "%s: %s (%s)\n", what, plasso_status_string(st), plasso_last_error_message());
    return 1;
  }
  return 0;
}

int main(void) {
  double time[N], x[N * P], eta[N], beta[P];
  int status[N];
  unsigned long long s = 42;
  for (int j = 0; j < N; ++j) {
    for (int k = 0; k < P; ++k) x[j * P + k] = uniform(&s) - 0.5;
    const double y = -log(uniform(&s)) * exp(-2.0 * x[j * P]);
    const double c = -log(uniform(&s));
    time[j] = y < c ? y : c;
    status[j] = y <= c;
  }

  plasso_dataset* data = NULL;
  plasso_model* model = NULL;
  if (check(plasso_dataset_create(N, P, 0, time, status, NULL, x, NULL, &data), "dataset")) return 1;

  plasso_options o;
  plasso_options_init(&o);
  o.lambda = 0.0;
  if (check(plasso_fit(data, &o, &model), "fit")) return 1;
  if (check(plasso_model_beta(model, beta, P), "beta")) return 1;
  if (check(plasso_model_predict(model, data, NULL, 0, eta, N), "predict")) return 1;
  if (!(beta[0] > 0.0)) {
    fprintf(stderr, "unexpected sign of beta[0]: %g\n", beta[0]);
    return 1;
  }

  char* json = NULL;
  if (check(plasso_model_to_json(model, &json), "json")) return 1;
  plasso_free_string(json);

  plasso_model* none = NULL;
  if (plasso_fit(NULL, &o, &none) != PLASSO_NULL_POINTER) return 1;

  plasso_model_free(model);
  plasso_dataset_free(data);
  printf("capi smoke ok (beta1 = %.4f)\n", beta[0]);
  return 0;
}
