#include <stdio.h>

#include "markov_product.h"

static int check(MpkStatus s) {
    if (s != MPK_STATUS_OK) {
        fprintf(stderr, "error[%s]: %s\n", mpk_status_name(s), mpk_last_error());
        return 1;
    }
    return 0;
}

int main(void) {
    const char *l1[] = {"x0", "a"};
    const char *l2[] = {"x0", "b"};
    double re1[] = {1.0, 0.5, 0.5, 1.0}, im1[] = {0, 0, 0, 0};
    double re2[] = {1.0, 0.5, 0.5, 1.0}, im2[] = {0, 0.5, -0.5, 0};
    MpkKernel *k1 = NULL, *k2 = NULL, *p = NULL;
    MpkCertificate *cert = NULL;

    if (check(mpk_kernel_new(l1, re1, im1, 2, &k1)) || check(mpk_kernel_new(l2, re2, im2, 2, &k2)) ||
        check(mpk_markov_product(k1, k2, "x0", 1e-12, &p)) || check(mpk_psd_check_eigen(p, 1e-9, &cert)))
        return 1;

    double re, im;
    if (check(mpk_kernel_get(p, "a", "b", &re, &im)))
        return 1;
    printf("K(a,b) = %g%+gi\n", re, im);
    printf("psd = %d, min eigenvalue = %.17g\n", mpk_certificate_verdict(cert),
           mpk_certificate_min_eigenvalue(cert));

    MpkVerifySummary summary;
    if (check(mpk_verify(k1, k2, "x0", 100000, 1, 0.0, &summary)))
        return 1;
    printf("verify passed = %d, max deviation = %.3e\n", summary.passed, summary.max_deviation);

    mpk_certificate_free(cert);
    mpk_kernel_free(p);
    mpk_kernel_free(k2);
    mpk_kernel_free(k1);
    return 0;
}
