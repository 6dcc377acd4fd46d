// Writes the bundled synthetic datasets into the directory given as the
// first argument (default: data).

#include <filesystem>
#include <iostream>
#include <string>

#include "epirecon/cli/commands.hpp"
#include "epirecon/cli/datasets.hpp"

using namespace epirecon;

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "data";
  try {
    const auto isaric = deconv::discretize_duration(deconv::kIsaricMeanlog, deconv::kIsaricSdlog, 80);
    cli::CommandResult out;
    out.add("deaths_two_wave.csv", cli::datasets::death_csv(cli::datasets::two_wave_deaths(isaric, 1)));
    out.add("deaths_overdispersed.csv", cli::datasets::death_csv(cli::datasets::two_wave_deaths(isaric, 2, 5.0)));
    cli::commit(out, dir);

    for (const auto& [name, sc] : {std::pair{"stationary", cli::datasets::stationary_scenario(1)},
                                   std::pair{"ageing", cli::datasets::ageing_scenario(1)}}) {
      const auto ds = cli::datasets::demography_dataset(sc);
      cli::CommandResult d;
      d.add("life_table.csv", ds.life_table);
      d.add("population.csv", ds.population);
      d.add("population_ref.csv", ds.population_ref);
      d.add("weekly_deaths.csv", ds.weekly_deaths);
      cli::commit(d, (std::filesystem::path(dir) / name).string());
      std::cout << name << ": target start " << util::format_date(ds.target_start) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
