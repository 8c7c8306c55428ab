double avg3(int a, int b, int c) {
    return (a + b + c) / 3.0;
}
