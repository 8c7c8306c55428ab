int count_digits(int n) {
    int c = 1;
    while (n >= 10) {
        n /= 10;
        c++;
    }
    return c;
}
