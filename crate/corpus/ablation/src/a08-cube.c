long long cube(long long x) {
    return x * x * x;
}
