#include <math.h>
#include <stdio.h>
#include <string.h>

#include "retraction_impact.h"

static int check(int ok, const char *what) {
    if (!ok) {
        const char *err = ri_last_error();
        fprintf(stderr, "failed: %s (%s)\n", what, err ? err : "no error");
    }
    return ok ? 0 : 1;
}

int main(void) {
    int failures = 0;

    double a[] = {1.0, 2.0}, b[] = {3.0, 4.0};
    RiMannWhitney mw;
    failures += check(ri_mann_whitney(a, 2, b, 2, RI_ALTERNATIVE_TWO_SIDED, &mw) == RI_STATUS_OK, "mann whitney");
    failures += check(fabs(mw.p_value - 1.0 / 3.0) < 1e-15 && mw.exact == 1, "exact p");

    unsigned counts[] = {1, 1, 1, 1};
    double kappa = 0.0;
    failures += check(ri_fleiss_kappa(counts, 2, 2, &kappa) == RI_STATUS_OK && kappa == -1.0, "kappa");

    RiCorpus *corpus = NULL;
    failures += check(ri_corpus_from_jsonl("{\"paper_id\":\"x\"}", &corpus) == RI_STATUS_DATA, "bad corpus rejected");
    failures += check(corpus == NULL && ri_last_error() != NULL, "error message set");

    const char *jsonl =
        "{\"paper_id\":\"a\",\"title\":\"A\",\"pub_year\":2000,\"journal\":\"J\",\"esi_category\":\"chemistry\"}\n"
        "{\"paper_id\":\"b\",\"title\":\"B\",\"pub_year\":2001,\"journal\":\"J\",\"esi_category\":\"chemistry\","
        "\"references\":[\"a\"],\"retraction\":{\"retraction_year\":2003}}\n";
    failures += check(ri_corpus_from_jsonl(jsonl, &corpus) == RI_STATUS_OK, "corpus");
    failures += check(ri_corpus_len(corpus) == 2 && ri_corpus_retracted(corpus) == 1, "corpus counts");

    char *json = NULL;
    failures += check(ri_describe_json(corpus, &json) == RI_STATUS_OK && strstr(json, "\"papers\":2") != NULL, "describe");
    ri_string_free(json);
    ri_corpus_free(corpus);

    printf("%s smoke test: %d failures\n", ri_version(), failures);
    return failures == 0 ? 0 : 1;
}
