#include <math.h>
#include <stdio.h>
#include "relnet.h"

int main(void) {
    RelnetNetwork *net = relnet_network_bridge();
    double r = 0.0;
    if (relnet_exact_reliability(net, NULL, 0, &r) != RELNET_STATUS_OK || fabs(r - 0.766) > 1e-12) {
        return 1;
    }
    uint64_t sims = 0;
    double probs[5] = {0.9, 0.8, 0.7, 0.6, 0.5};
    if (relnet_bat_mcs_estimate(net, probs, 5, 5, 100, 1, &r, &sims) != RELNET_STATUS_OK || sims != 0) {
        return 2;
    }
    if (relnet_exact_reliability(net, probs, 4, &r) != RELNET_STATUS_INVALID_ARGUMENT || relnet_last_error() == NULL) {
        return 3;
    }
    relnet_network_free(net);
    printf("%.6f\n", r);
    return 0;
}
