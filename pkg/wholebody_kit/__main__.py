from wholebody_kit.cli import run

if __name__ == "__main__":
    run()
