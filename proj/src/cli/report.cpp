#include "lorentz/cli/report.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include "json.hpp"

namespace lorentz::cli {

int emit_report(const std::filesystem::path& bundle_dir, std::ostream& out) {
  const auto path = bundle_dir / "results.json";
  std::ifstream in(path);
  if (!in) throw MissingBundle("no results.json in " + bundle_dir.string());
  nlohmann::ordered_json bundle;
  try {
    bundle = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw MissingBundle("unreadable bundle " + path.string() + ": " + e.what());
  }
  if (!bundle.contains("verdict")) throw MissingBundle("bundle without a verdict: " + path.string());

  const auto experiment = bundle.value("experiment", std::string("?"));
  out << "experiment " << experiment << "  (build " << bundle["build"].value("git_describe", "?") << ")\n";
  bool pass = true;
  for (const auto& v : bundle.value("verdicts", nlohmann::ordered_json::array())) {
    const bool ok = v.value("pass", false);
    pass = pass && ok;
    out << (ok ? "PASS " : "FAIL ") << std::left << std::setw(26) << v.value("name", std::string("?")) << ' '
        << v.value("detail", std::string()) << '\n';
  }
  if (bundle.contains("error")) {
    pass = false;
    out << "ERROR " << bundle["error"].value("type", std::string("?")) << ": "
        << bundle["error"].value("message", std::string()) << '\n';
  }
  // offending rows of the tabular verdicts
  if (bundle.contains("results") && bundle["results"].contains("mixing")) {
    for (const auto& r : bundle["results"]["mixing"]) {
      if (r.value("verdict", true)) continue;
      out << "  row n=" << r["n"] << " n_I_hat=" << r["n_I_hat"]["value"] << " target=" << r["target"]["value"]
          << " allowed=" << r["allowed"]["value"] << '\n';
    }
  }
  out << (pass ? "PASS " : "FAIL ") << experiment << '\n';
  return pass ? 0 : 1;
}

}  // namespace lorentz::cli
