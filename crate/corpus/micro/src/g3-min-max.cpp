#include <iostream>

int main() {
    int n;
    std::cin >> n;
    int lo = 0, hi = 0;
    for (int i = 0; i < n; ++i) {
        int x;
        std::cin >> x;
        if (i == 0 || x < lo) lo = x;
        if (i == 0 || x > hi) hi = x;
    }
    std::cout << lo << " " << hi << std::endl;
    return 0;
}
