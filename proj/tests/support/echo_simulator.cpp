// Scripted stub for the simulator protocol tests.
//   echo_simulator [mode]
// modes: sum (y = x1 + w1), malformed, wrong-id, exit, hang, seed (y = seed % 1000)

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "sum";
  std::string line;
  while (std::getline(std::cin, line)) {
    const auto req = nlohmann::json::parse(line);
    const long id = req.at("id").get<long>();
    if (mode == "malformed") {
      std::cout << "this is not json" << std::endl;
      continue;
    }
    if (mode == "exit") {
      std::cerr << "simulator crashed on request " << id << std::endl;
      return 3;
    }
    if (mode == "hang") {
      std::this_thread::sleep_for(std::chrono::hours(1));
      return 0;
    }
    nlohmann::json resp;
    resp["id"] = mode == "wrong-id" ? id + 1 : id;
    if (mode == "seed") {
      resp["y"] = static_cast<double>(req.at("seed").get<std::uint64_t>() % 1000);
    } else {
      resp["y"] = req.at("x").at(0).get<double>() + req.at("w").at(0).get<double>();
    }
    std::cout << resp.dump() << std::endl;
  }
  return 0;
}
