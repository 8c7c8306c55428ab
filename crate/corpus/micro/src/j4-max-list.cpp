#include <vector>

int max_of(const std::vector<int>& v) {
    int best = v[0];
    for (int x : v)
        if (x > best) best = x;
    return best;
}
