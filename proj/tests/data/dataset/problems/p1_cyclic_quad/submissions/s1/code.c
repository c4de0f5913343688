#include <stdio.h>

int main(void) {
    int a, b, c, d;
    printf("Enter 4 angles: ");
    if (scanf("%d %d %d %d", &a, &b, &c, &d) != 4) {
        printf("Invalid input.\n");
        return 1;
    }
    if (a <= 0 || b <= 0 || c <= 0 || d <= 0) {
        printf("Angles must be positive.\n");
        return 1;
    }
    if (a + c == 180 && b + d == 180)
        printf("YES\n");
    else
        printf("NO\n");
    return 0;
}
