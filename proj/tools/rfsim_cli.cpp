// rfsim command-line tool. Argument parsing only; see rfsim/cli.hpp.

#include "rfsim/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

// numeric options accept netlist-style values ("2.4g", "100meg", "1m")
const CLI::Validator spice_value(
    [](std::string& s) {
        try {
            s = rfsim::format_roundtrip(rfsim::parse_value(s));
        } catch (const rfsim::ParseError& e) {
            return std::string(e.what());
        }
        return std::string();
    },
    "VALUE");

void add_common(CLI::App* cmd, rfsim::cli::RunConfig& cfg, std::string& format) {
    cmd->add_option("--out,-o", cfg.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--format", format, "csv, json or touchstone")
        ->check(CLI::IsMember({"csv", "json", "touchstone"}));
    cmd->add_option("--set", cfg.overrides, "key=value override (repeatable)");
}

} // namespace

int main(int argc, char** argv) {
    rfsim::cli::RunConfig cfg;
    std::string format;

    CLI::App app{"rfsim: netlist-driven RF circuit simulator"};
    app.set_version_flag("--version", rfsim::cli::version);
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run every analysis directive in a netlist");
    run->add_option("netlist", cfg.input)->required();
    run->add_option("--f0", cfg.f0, "design frequency for inductor Q, Hz")->transform(spice_value)->capture_default_str();
    add_common(run, cfg, format);

    auto* sparam = app.add_subcommand("sparam", "S-parameter sweep over the netlist ports");
    sparam->add_option("netlist", cfg.input)->required();
    sparam->add_option("--f0", cfg.f0, "design frequency for inductor Q, Hz")->transform(spice_value)->capture_default_str();
    sparam->add_option("--fstart", cfg.fstart, "sweep start, Hz (default 100 MHz)")->transform(spice_value);
    sparam->add_option("--fstop", cfg.fstop, "sweep stop, Hz (default 6 GHz)")->transform(spice_value);
    sparam->add_option("--pts", cfg.pts, "points per decade (default 20)");
    add_common(sparam, cfg, format);

    auto* pss = app.add_subcommand("pss", "periodic steady state and power report");
    pss->add_option("netlist", cfg.input)->required();
    pss->add_option("--f0", cfg.f0, "fundamental, Hz")->transform(spice_value)->required();
    pss->add_option("--periods", cfg.periods, "maximum periods (default 200)");
    pss->add_option("--tol", cfg.tol, "settling tolerance, V (default 1e-3)")->transform(spice_value);
    pss->add_option("--samples", cfg.samples, "samples per period (default 256)");
    pss->add_option("--pin", cfg.pin_dbm, "drive port 1 at f0 with this available power, dBm")->transform(spice_value);
    pss->add_option("--load", cfg.load, "load resistor name or port<N> (default: highest port)");
    pss->add_option("--zvs", cfg.zvs_element, "switch or MOSFET for the ZVS residual");
    add_common(pss, cfg, format);

    auto* ip3 = app.add_subcommand("ip3", "two-tone IIP3/OIP3 between port 1 and port 2");
    ip3->add_option("netlist", cfg.input)->required();
    ip3->add_option("--f0", cfg.f0, "design frequency for inductor Q, Hz")->transform(spice_value)->capture_default_str();
    ip3->add_option("--f1", cfg.f1, "first tone, Hz")->transform(spice_value)->capture_default_str();
    ip3->add_option("--f2", cfg.f2, "second tone, Hz")->transform(spice_value)->capture_default_str();
    ip3->add_option("--levels", cfg.levels, "per-tone available powers, dBm")->transform(spice_value)->delimiter(',');
    add_common(ip3, cfg, format);

    auto* repro = app.add_subcommand("repro", "run the bundled PA / switch target check");
    repro->add_option("target", cfg.input, "pa, switch or both")->required();
    repro->add_option("--f0", cfg.f0, "operating frequency, Hz")->transform(spice_value)->capture_default_str();
    repro->add_option("--pin", cfg.pin_dbm, "PA drive, dBm (default 10)")->transform(spice_value);
    add_common(repro, cfg, format);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    for (auto* sub : app.get_subcommands()) cfg.command = sub->get_name();
    if (!format.empty()) cfg.format = rfsim::cli::parse_format(format);
    return rfsim::cli::execute(cfg, std::cout, std::cerr);
}
