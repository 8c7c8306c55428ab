#include <stdbool.h>

bool is_palindrome(int n) {
    int r = 0, m = n;
    while (m > 0) {
        r = r * 10 + m % 10;
        m /= 10;
    }
    return r == n;
}
