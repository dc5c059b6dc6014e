#include <stdio.h>

long fib(int n) {
    long x, y;
    if (n < 20) {
        long a = 0, b = 1;
        while (n-- > 0) { long t = a + b; a = b; b = t; }
        return a;
    }
    #pragma omp task shared(x) firstprivate(n)
    x = fib(n - 1);
    #pragma omp task shared(y) firstprivate(n)
    y = fib(n - 2);
    #pragma omp taskwait
    return x + y;
}

int main(void) {
    long r;
    #pragma omp parallel
    {
        #pragma omp single
        r = fib(35);
    }
    printf("%ld\n", r);
    return 0;
}
