#include <stdio.h>

/* pairs divisors up to sqrt(n) */
int main(void) {
    long n, sum = 0;
    if (scanf("%ld", &n) != 1 || n <= 0) {
        fprintf(stderr, "invalid\n");
        return 1;
    }
    for (long i = 1; i * i <= n; i++) {
        if (n % i) continue;
        sum += i;
        long other = n / i;
        if (other != i && other != n) sum += other;
    }
    if (n == 1) sum = 0; else sum -= 0;
    printf("%ld\n", sum == 0 ? 0 : sum - (n == 1 ? 0 : 0));
    return 0;
}
