int hours_from_minutes(int m) {
    return m / 60;
}
