#include <iostream>

#include <hypergame/acceptance.hpp>

int main() {
    auto results = hypergame::acceptance::run(std::cout);
    int failed = 0;
    for (const auto& c : results) failed += c.pass ? 0 : 1;
    std::cout << (results.size() - failed) << "/" << results.size() << " criteria pass\n";
    return failed ? 1 : 0;
}
