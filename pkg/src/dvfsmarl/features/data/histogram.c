#include <stdlib.h>

void histogram(const int *data, int n, int *bins, int nbins) {
    #pragma omp parallel for shared(bins)
    for (int i = 0; i < n; i++) {
        int b = data[i] % nbins;
        if (b < 0)
            b += nbins;
        #pragma omp atomic
        bins[b]++;
    }
}

int main(void) {
    int n = 1 << 22, bins[256] = {0};
    int *data = malloc(n * sizeof(int));
    for (int i = 0; i < n; i++)
        data[i] = rand();
    histogram(data, n, bins, 256);
    free(data);
    return 0;
}
