#include <stdio.h>

int gcd(int a, int b) {
    if (a == b) return a;
    if (a > b) return gcd(a - b, b);   /* subtraction variant, slow */
    return gcd(a, b - a);
}

int main(void) {
    int a, b;
    scanf("%d %d", &a, &b);
    printf("%d\n", gcd(a, b));
    return 0;
}
