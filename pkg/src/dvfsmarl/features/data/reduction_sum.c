#include <stdio.h>

double dot(const double *x, const double *y, long n) {
    double s = 0.0;
    #pragma omp parallel for reduction(+:s)
    for (long i = 0; i < n; i++)
        s += x[i] * y[i];
    return s;
}

int main(void) {
    static double x[1000000], y[1000000];
    for (long i = 0; i < 1000000; i++) { x[i] = 1.0; y[i] = 0.5; }
    printf("%f\n", dot(x, y, 1000000));
    return 0;
}
