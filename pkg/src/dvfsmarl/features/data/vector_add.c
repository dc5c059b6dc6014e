#include <stdlib.h>

void vadd(const double *a, const double *b, double *c, int n) {
    #pragma omp parallel for shared(a, b, c)
    for (int i = 0; i < n; i++)
        c[i] = a[i] + b[i];
}

int main(void) {
    int n = 1 << 20;
    double *a = malloc(n * sizeof(double));
    double *b = malloc(n * sizeof(double));
    double *c = malloc(n * sizeof(double));
    for (int i = 0; i < n; i++) { a[i] = i; b[i] = 2 * i; }
    vadd(a, b, c, n);
    free(a); free(b); free(c);
    return 0;
}
