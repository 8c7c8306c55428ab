package main

import (
	"bufio"
	"fmt"
	"os"
	"strings"
)

func main() {
	r := bufio.NewReader(os.Stdin)
	line, _ := r.ReadString('\n')
	fmt.Println(strings.ToUpper(strings.TrimRight(line, "\n")))
}
