#include <stdio.h>
#include "lipp.h"

int main(void) {
    LippIndexU64 *idx = NULL;
    LippParams params = lipp_default_params();
    if (lipp_u64_new(&params, &idx) != LIPP_STATUS_OK) return 1;
    for (uint64_t k = 0; k < 100; k++) lipp_u64_insert(idx, k * 3, k);
    uint64_t v = 0;
    LippStatus s = lipp_u64_get(idx, 30, &v);
    printf("%s %llu\n", lipp_status_str(s), (unsigned long long)v);
    uint64_t keys[8], vals[8];
    size_t n = 0;
    lipp_u64_range(idx, 0, 20, keys, vals, 8, &n);
    LippStats st;
    lipp_u64_stats(idx, &st);
    lipp_u64_free(idx);
    return n == 7 && st.elements == 100 ? 0 : 1;
}
