#define NX 1024
#define NY 1024
static double u[NX][NY], v[NX][NY];

void sweep(int steps) {
    for (int t = 0; t < steps; t++) {
        #pragma omp parallel for collapse(2) shared(u, v)
        for (int i = 1; i < NX - 1; i++)
            for (int j = 1; j < NY - 1; j++)
                v[i][j] = 0.25 * (u[i - 1][j] + u[i + 1][j] + u[i][j - 1] + u[i][j + 1]);
        #pragma omp parallel for collapse(2) shared(u, v)
        for (int i = 1; i < NX - 1; i++)
            for (int j = 1; j < NY - 1; j++)
                u[i][j] = v[i][j];
    }
}

int main(void) {
    sweep(100);
    return 0;
}
