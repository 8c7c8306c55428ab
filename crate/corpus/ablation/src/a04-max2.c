int max2(int a, int b) {
    return a > b ? a : b;
}
