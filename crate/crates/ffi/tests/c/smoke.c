#include <math.h>
#include <stdio.h>
#include <string.h>

#include "stablekm.h"

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "check failed line %d: %s\n", __LINE__, #cond); \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    const double pts[] = {0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 5.0, 5.0, 5.1, 5.0, 5.0, 5.1};
    SkmInstance *inst = NULL;
    CHECK(skm_instance_new(pts, 6, 2, NULL, &inst) == SKM_STATUS_OK);
    CHECK(skm_instance_n(inst) == 6 && skm_instance_d(inst) == 2);

    SkmOptions opts = skm_options_default();
    opts.k = 2;
    SkmClustering *c = NULL;
    CHECK(skm_cluster(inst, SKM_ALGORITHM_STABLE, &opts, &c) == SKM_STATUS_OK);
    size_t a[6];
    CHECK(skm_clustering_assignment(c, a, 6) == SKM_STATUS_OK);
    CHECK(a[0] == a[1] && a[1] == a[2] && a[3] == a[4] && a[4] == a[5] && a[0] != a[3]);
    CHECK(fabs(skm_clustering_cost(c) - 4 * 0.01 * 2.0 / 3.0) < 1e-9);

    opts.k = 7;
    SkmClustering *bad = NULL;
    CHECK(skm_cluster(inst, SKM_ALGORITHM_STABLE, &opts, &bad) == SKM_STATUS_TOO_LARGE);
    CHECK(bad == NULL);
    char msg[256];
    CHECK(skm_last_error_length() > 0);
    CHECK(skm_last_error_message(msg, sizeof msg) == SKM_STATUS_OK);
    CHECK(strstr(msg, "k = 7") != NULL);

    skm_clustering_free(c);
    skm_instance_free(inst);
    printf("ok %s\n", skm_version());
    return 0;
}
