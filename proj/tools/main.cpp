#include <exception>
#include <iostream>

#include "blockprnu/error.hpp"
#include "cli_util.hpp"

int main(int argc, char** argv) {
    namespace cli = blockprnu::cli;
    CLI::App app{"Block-weighted PRNU source attribution for compressed video.\n"
                 "Exit codes: 0 success, 2 usage or configuration, 3 input format, 4 degenerate computation."};
    app.name("blockprnu");
    app.require_subcommand(1);

    cli::Action action;
    cli::add_inspect(app, action);
    cli::add_estimate(app, action);
    cli::add_match(app, action);
    cli::add_calibrate(app, action);
    cli::add_simulate(app, action);
    cli::add_evaluate(app, action);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return action ? action() : 2;
    } catch (const blockprnu::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return blockprnu::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
