#include <stdio.h>
#include <stdlib.h>
#include "seqdiag.h"

int main(void) {
    SeqdiagModel *model = NULL;
    if (seqdiag_model_multichannel(2, 0.0, 1.0, 1.0, 1.0, true, &model) != SEQDIAG_STATUS_OK) {
        fprintf(stderr, "model: %s\n", seqdiag_last_error());
        return 1;
    }
    SeqdiagProcedure *proc = NULL;
    if (seqdiag_procedure_new(model, "adaptive", 3.0, 1.0, &proc) != SEQDIAG_STATUS_OK) {
        fprintf(stderr, "procedure: %s\n", seqdiag_last_error());
        return 1;
    }
    seqdiag_model_free(model);

    /* both channels shifted: the third alternative */
    double x[2] = {1.0, 1.0};
    int64_t decision = -1;
    int steps = 0;
    while (decision < 0 && steps < 100) {
        if (seqdiag_procedure_step(proc, x, 2, &decision) != SEQDIAG_STATUS_OK) {
            fprintf(stderr, "step: %s\n", seqdiag_last_error());
            return 1;
        }
        steps++;
    }
    printf("stopped after %d steps, decision %lld\n", steps, (long long)decision);

    if (seqdiag_procedure_step(proc, x, 3, &decision) != SEQDIAG_STATUS_INVALID_ARGUMENT) {
        return 1;
    }
    seqdiag_procedure_free(proc);
    return decision == 2 ? 0 : 1;
}
